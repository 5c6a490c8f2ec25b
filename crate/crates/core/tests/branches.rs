use ellstab_core::degenerate::{signed_solutions, weighted_eigen, DegenerateSpec, Weight};
use ellstab_core::gelfand::{log_grid, shoot_lambda, trace_branch, ShootOptions};
use ellstab_core::ode::Method;
use ellstab_core::{GridKind, Nonlinearity, ProblemParams, RadialGrid};

#[test]
fn henon_exponential_branch() {
    let params = ProblemParams::new(3, 1.0).unwrap();
    let f = Nonlinearity::Exponential { coeff: 1.0, rate: 1.0 };
    let opts = ShootOptions::new(RadialGrid::new(GridKind::Graded, 1024, 1e-6, None).unwrap());
    let ms = log_grid(1e-3, 20.0, 33);
    let rep = trace_branch(params, &f, &ms, &opts).unwrap();
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);
    let pts = &rep.points;
    assert!(pts[0].lambda < pts[pts.len() / 2].lambda);
    assert!(rep.interior_max);
    assert!(pts.last().unwrap().lambda < rep.lambda_star);
    let first = rep.first_unstable().unwrap() as i64;
    assert!((first - rep.minimal_len as i64).abs() <= 1, "{first} {}", rep.minimal_len);
    assert_eq!(rep.monotonicity_violations(), 0);
    assert!(rep.minimal_branch().iter().all(|p| p.residual < 1e-6));
}

#[test]
fn rk4_shooting_converges_at_order_three_or_more() {
    let params = ProblemParams::autonomous(5).unwrap();
    let f = Nonlinearity::Power { coeff: 1.0, exponent: 2.0, shift: 1.0 };
    let l = |h: f64| shoot_lambda(params, &f, 0.5, Method::FixedRk4 { step: h }).unwrap();
    let (a, b, c) = (l(0.05), l(0.025), l(0.0125));
    assert!((a - b).abs() >= 8.0 * (b - c).abs(), "{a} {b} {c}");
}

#[test]
fn signed_solutions_with_ramp_weight() {
    let params = ProblemParams::autonomous(3).unwrap();
    let grid = RadialGrid::new(GridKind::Graded, 1024, 1e-6, Some(0.4)).unwrap();
    let g = Nonlinearity::Power { coeff: 25.0, exponent: 1.0, shift: 0.0 };
    let f = Nonlinearity::Power { coeff: 1.0, exponent: 3.0, shift: 0.0 };
    let spec = DegenerateSpec::new(params, 0.4, Weight::Ramp, g, f).unwrap();
    let tol = 1e-9;
    let rep = signed_solutions(&spec, &grid, 200_000, tol).unwrap();
    assert!(rep.lambda1_ball < 25.0 && 25.0 < rep.lambda1_inner);
    assert!(rep.ordering_certificate);
    for s in [rep.positive_solution.unwrap(), rep.negative_solution.unwrap()] {
        assert!(s.bracket_gap < 10.0 * tol, "{}", s.bracket_gap);
        assert!(s.residual < 10.0 * tol);
        let sign = s.profile.u[0].signum();
        assert!(s.profile.u[..grid.len() - 1].iter().all(|&u| u.signum() == sign));
    }
    let curve = &rep.lambda1_mu_curve;
    assert!(curve.windows(2).all(|w| w[1].1 >= w[0].1));
    let top = weighted_eigen(&spec, 1e6, 1, &grid).unwrap()[0];
    assert!(top <= rep.lambda1_inner * (1.0 + 1e-9));
}
