use ellstab_core::grid::GridKind;
use ellstab_core::profiles::{psi_profile, recover_nonlinearity, synthesize_solution};
use ellstab_core::spectral::{
    assemble_pencil, assemble_with_potential, cc_quotient, hardy_check, morse_index, radial_index,
    smallest_eigenvalues, QuadraticFormSpec, SpectralPencil,
};
use ellstab_core::{ProblemParams, RadialGrid};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense(t: &ellstab_core::tridiag::SymTridiag) -> DMatrix<f64> {
    let n = t.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = t.diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = t.off[i];
            m[(i + 1, i)] = t.off[i];
        }
    }
    m
}

/// Generalized eigenvalues via Cholesky reduction and a dense symmetric eigensolver.
fn dense_eigenvalues(p: &SpectralPencil) -> Vec<f64> {
    let k = dense(&p.stiffness);
    let l = dense(&p.mass).cholesky().expect("mass is positive definite").l();
    let linv = l.clone().try_inverse().unwrap();
    let c = &linv * k * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn inertia_matches_bisection_and_dense_oracle() {
    let params = ProblemParams::autonomous(3).unwrap();
    let grid = RadialGrid::new(GridKind::Uniform, 96, 1.0 / 96.0, None).unwrap();
    let spec = QuadraticFormSpec::ball(params, &grid);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut nontrivial = 0;
    for _ in 0..50 {
        let amps: Vec<f64> = (0..4).map(|_| rng.gen_range(-150.0..250.0)).collect();
        let v: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&r| amps.iter().enumerate().map(|(k, a)| a * (k as f64 * std::f64::consts::PI * r).cos()).sum())
            .collect();
        let pencil = assemble_with_potential(&grid, &v, &spec).unwrap();
        let idx = morse_index(&pencil);
        let k = (idx.index + 2).min(pencil.len());
        let bis = smallest_eigenvalues(&pencil, k).unwrap();
        let dense_ev = dense_eigenvalues(&pencil);
        let bis_neg = bis.iter().filter(|&&e| e < 0.0).count();
        let dense_neg = dense_ev.iter().filter(|&&e| e < 0.0).count();
        nontrivial += usize::from(idx.index > 0);
        assert_eq!(idx.index, bis_neg, "{amps:?}");
        assert_eq!(idx.index, dense_neg, "{amps:?}");
        for (a, b) in bis.iter().zip(&dense_ev) {
            assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
    assert!(nontrivial >= 10, "{nontrivial}");
}

#[test]
fn counterexample_index_splits() {
    let r0 = 0.05;
    let grid = RadialGrid::default_graded(Some(r0)).unwrap();
    for dim in 3..=9 {
        let params = ProblemParams::autonomous(dim).unwrap();
        let psi = psi_profile(params, r0).unwrap();
        let u = synthesize_solution(&psi, &grid).unwrap();
        let f = recover_nonlinearity(&psi, &grid).unwrap();
        let ball = radial_index(&u, &f, &QuadraticFormSpec::ball(params, &grid)).unwrap();
        let inner = radial_index(&u, &f, &QuadraticFormSpec::inner_ball(params, &grid, r0)).unwrap();
        let ann = radial_index(&u, &f, &QuadraticFormSpec::annulus(params, r0, 1.0)).unwrap();
        assert_eq!((ball.index, inner.index, ann.index), (1, 0, 0), "N={dim}");
        // f' vanishes on the plateau, so the inner pencil is the bare Laplacian
        let pencil = assemble_pencil(&u, &f, &QuadraticFormSpec::inner_ball(params, &grid, r0), &grid).unwrap();
        assert!(smallest_eigenvalues(&pencil, 1).unwrap()[0] > 0.0);
        // the annulus quotient and the annulus index agree
        let cc = cc_quotient(&u, r0).unwrap();
        assert_eq!(cc >= dim as f64 - 1.0, ann.index == 0, "N={dim} cc={cc}");
    }
}

#[test]
fn index_is_grid_robust() {
    for (dim, r0) in [(3, 0.2), (5, 0.05), (9, 0.5)] {
        let params = ProblemParams::autonomous(dim).unwrap();
        let psi = psi_profile(params, r0).unwrap();
        let coarse = RadialGrid::new(GridKind::Graded, 1024, 1e-6, Some(r0)).unwrap();
        let fine = coarse.refined().unwrap();
        let eig = |g: &RadialGrid| {
            let u = synthesize_solution(&psi, g).unwrap();
            let f = recover_nonlinearity(&psi, g).unwrap();
            let p = assemble_pencil(&u, &f, &QuadraticFormSpec::ball(params, g), g).unwrap();
            (morse_index(&p).index, smallest_eigenvalues(&p, 3).unwrap())
        };
        let (ic, ec) = eig(&coarse);
        let (if_, ef) = eig(&fine);
        let err = ec.iter().zip(&ef).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let gap = ef.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
        if gap > 10.0 * err {
            assert_eq!(ic, if_, "N={dim} r0={r0}");
        }
    }
}

#[test]
fn hardy_seeded_sweep() {
    let grid = RadialGrid::new(GridKind::Graded, 512, 1e-6, None).unwrap();
    let nodes = grid.nodes().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let i = rng.gen_range(0..nodes.len() - 3);
        let j = rng.gen_range(i + 2..nodes.len());
        let alpha = rng.gen_range(-12.0..4.0);
        let omega: Vec<f64> =
            (0..nodes.len()).map(|k| if k > i && k < j { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
        let h = hardy_check(&omega, nodes[i], nodes[j], alpha, &grid).unwrap();
        assert!(h.margin >= -1e-10 * (h.lhs + h.rhs), "{h:?} alpha={alpha}");
    }
}

proptest! {
    #[test]
    fn hardy_holds_for_tents(lo in 0usize..400, width in 2usize..100, alpha in -12.0f64..4.0, peak in 0.1f64..10.0) {
        let grid = RadialGrid::new(GridKind::Graded, 512, 1e-6, None).unwrap();
        let nodes = grid.nodes();
        let hi = (lo + width).min(nodes.len() - 1);
        let mid = (lo + hi) / 2;
        let omega: Vec<f64> = (0..nodes.len())
            .map(|k| {
                if k <= lo || k >= hi {
                    0.0
                } else if k <= mid {
                    peak * (k - lo) as f64 / (mid - lo) as f64
                } else {
                    peak * (hi - k) as f64 / (hi - mid) as f64
                }
            })
            .collect();
        let h = hardy_check(&omega, nodes[lo], nodes[hi], alpha, &grid).unwrap();
        prop_assert!(h.margin >= -1e-10 * (h.lhs + h.rhs));
    }
}
