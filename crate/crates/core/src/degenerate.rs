//! `-Δu = g(u) - h(x) f(u)` in `B_1` with `h` vanishing on an inner ball `B_ρ`.
//!
//! Two pieces: the penalized eigenvalue `λ_1(μ)` of `-Δ + μh`, which increases from
//! `λ_1(B_1)` to `λ_1(B_ρ)`, and a sub/supersolution construction of one positive and
//! one negative solution when `λ_1(B_1) < λ < λ_1(B_ρ)`, `λ = lim g(t)/t`.
//!
//! The nonlinear problem uses P1 stiffness with a lumped mass, so `K + cM_L` is an
//! M-matrix and the monotone iteration preserves order exactly.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::nonlinearity::Nonlinearity;
use crate::params::ProblemParams;
use crate::profiles::RadialProfile;
use crate::spectral::{assemble_with_potential, smallest_eigenvalues, QuadraticFormSpec, SpectralPencil};
use crate::tridiag::SymTridiag;

/// Penalization strengths tried when building the supersolution: `10^{k/2}`, `k = 0..=16`.
pub fn mu_sweep() -> Vec<f64> {
    (0..=16).map(|k| 10f64.powf(k as f64 / 2.0)).collect()
}

/// Shape of `h` on `(ρ, 1]`; `h ≡ 0` on `[0, ρ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Indicator,
    /// `(r - ρ)/(1 - ρ)`.
    Ramp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateSpec {
    pub params: ProblemParams,
    pub rho: f64,
    pub weight: Weight,
    pub g: Nonlinearity,
    pub f: Nonlinearity,
}

impl DegenerateSpec {
    pub fn new(params: ProblemParams, rho: f64, weight: Weight, g: Nonlinearity, f: Nonlinearity) -> Result<Self> {
        if params.alpha() != 0.0 {
            return Err(Error::Parameter("the degenerate problem has no |x|^α weight".into()));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Parameter(format!("rho must lie in (0, 1), got {rho}")));
        }
        if f.value(0.0)? != 0.0 {
            return Err(Error::Parameter("f(0) must vanish".into()));
        }
        Ok(Self { params, rho, weight, g, f })
    }

    pub fn h(&self, r: f64) -> f64 {
        if r <= self.rho {
            return 0.0;
        }
        match self.weight {
            Weight::Indicator => 1.0,
            Weight::Ramp => (r - self.rho) / (1.0 - self.rho),
        }
    }

    /// `lim g(t)/t`.
    pub fn lambda(&self) -> Result<f64> {
        self.g.asymptotic_slope().ok_or_else(|| Error::Unsupported("g must have a finite asymptotic slope".into()))
    }

    fn check_grid(&self, grid: &RadialGrid) -> Result<()> {
        grid.index_of(self.rho).map(|_| ()).ok_or_else(|| {
            Error::Precondition(format!("rho = {} must be a grid node (use it as the anchor)", self.rho))
        })
    }
}

/// The `k` smallest eigenvalues of `-Δ + μh` on `B_1`, Dirichlet at `r = 1`.
pub fn weighted_eigen(spec: &DegenerateSpec, mu: f64, k: usize, grid: &RadialGrid) -> Result<Vec<f64>> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::Parameter(format!("mu must be finite and nonnegative, got {mu}")));
    }
    spec.check_grid(grid)?;
    let potential: Vec<f64> = grid.nodes().iter().map(|&r| -mu * spec.h(r)).collect();
    let pencil = assemble_with_potential(grid, &potential, &QuadraticFormSpec::ball(spec.params, grid))?;
    smallest_eigenvalues(&pencil, k)
}

/// First Dirichlet eigenvalue of `B_ρ`.
pub fn lambda1_inner(spec: &DegenerateSpec, grid: &RadialGrid) -> Result<f64> {
    spec.check_grid(grid)?;
    let zero = vec![0.0; grid.len()];
    let pencil = assemble_with_potential(grid, &zero, &QuadraticFormSpec::inner_ball(spec.params, grid, spec.rho))?;
    Ok(smallest_eigenvalues(&pencil, 1)?[0])
}

/// `(μ, λ_1(μ))` over `mus`, computed in parallel.
pub fn lambda1_curve(spec: &DegenerateSpec, mus: &[f64], grid: &RadialGrid) -> Result<Vec<(f64, f64)>> {
    mus.par_iter().map(|&mu| Ok((mu, weighted_eigen(spec, mu, 1, grid)?[0]))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedSolution {
    pub profile: RadialProfile,
    pub sub: Vec<f64>,
    pub sup: Vec<f64>,
    /// `μ` of the auxiliary problem defining the supersolution.
    pub mu: f64,
    pub iterations: usize,
    /// `max(upper - lower)` between the iterates started from the sub- and the supersolution.
    pub bracket_gap: f64,
    /// Nodewise relative residual of the discrete equation, see `Discrete::relative_residual`.
    pub residual: f64,
    /// `sub ≤ u ≤ sup` at every node.
    pub ordered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedSolutionReport {
    pub positive_solution: Option<SignedSolution>,
    pub negative_solution: Option<SignedSolution>,
    pub iterations: usize,
    pub ordering_certificate: bool,
    pub lambda1_mu_curve: Vec<(f64, f64)>,
    pub lambda1_ball: f64,
    pub lambda1_inner: f64,
}

/// `u ↦ s·φ(s·u)` view of a nonlinearity: `s = 1` is `φ`, `s = -1` its reflection `-φ(-u)`.
#[derive(Clone, Copy)]
struct Oriented<'a> {
    f: &'a Nonlinearity,
    s: f64,
}

impl Oriented<'_> {
    fn value(&self, u: f64) -> Result<f64> {
        Ok(self.s * self.f.value(self.s * u)?)
    }

    fn derivative(&self, u: f64) -> Result<f64> {
        self.f.derivative(self.s * u)
    }

    fn lipschitz(&self, lo: f64, hi: f64) -> Result<f64> {
        let (a, b) = if self.s > 0.0 { (lo, hi) } else { (-hi, -lo) };
        self.f.lipschitz_bound(a, b)
    }
}

/// Lumped discretization on the free nodes `[r_min, 1)`.
struct Discrete {
    k: SymTridiag,
    lumped: Vec<f64>,
    h: Vec<f64>,
    radii: Vec<f64>,
    /// Coupling of the last free node to the boundary value `u(1)`.
    boundary_coupling: f64,
}

impl Discrete {
    fn new(spec: &DegenerateSpec, grid: &RadialGrid) -> Result<Self> {
        let zero = vec![0.0; grid.len()];
        let pencil = assemble_with_potential(grid, &zero, &QuadraticFormSpec::ball(spec.params, grid))?;
        let n = pencil.len();
        let m = &pencil.mass;
        let lumped: Vec<f64> = (0..n)
            .map(|i| m.diag[i] + if i > 0 { m.off[i - 1] } else { 0.0 } + if i + 1 < n { m.off[i] } else { 0.0 })
            .collect();
        // constants lie in the kernel of the full stiffness, so the missing column is minus the row sum
        let row_sum = pencil.stiffness.matvec(&vec![1.0; n]);
        let h = pencil.radii.iter().map(|&r| spec.h(r)).collect();
        Ok(Self { boundary_coupling: -row_sum[n - 1], k: pencil.stiffness, lumped, h, radii: pencil.radii })
    }

    fn len(&self) -> usize {
        self.lumped.len()
    }

    fn diag_pencil(&self, potential_scale: f64, shift: &[f64]) -> SpectralPencil {
        let mut k = self.k.clone();
        for i in 0..self.len() {
            k.diag[i] += shift[i] * self.lumped[i];
        }
        SpectralPencil {
            stiffness: k,
            mass: SymTridiag { diag: self.lumped.clone(), off: vec![0.0; self.len() - 1] },
            radii: self.radii.clone(),
            scale: potential_scale,
        }
    }

    /// First eigenpair of `(K + μH, M_L)`; the eigenvector is positive with unit maximum.
    fn first_pair(&self, mu: f64) -> Result<(f64, Vec<f64>)> {
        let shift: Vec<f64> = self.h.iter().map(|&h| mu * h).collect();
        let pencil = self.diag_pencil(mu, &shift);
        let lam = smallest_eigenvalues(&pencil, 1)?[0];
        let sigma = lam - 1e-6 * (1.0 + lam.abs());
        let a = pencil.stiffness.axpy(-sigma, &pencil.mass);
        let mut x = vec![1.0; self.len()];
        for _ in 0..8 {
            let rhs: Vec<f64> = x.iter().zip(&self.lumped).map(|(a, b)| a * b).collect();
            x = a.solve(&rhs)?;
            let top = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let sign = x.iter().map(|v| v.signum()).sum::<f64>().signum();
            x.iter_mut().for_each(|v| *v *= sign / top);
        }
        Ok((lam, x))
    }

    /// `(|K| |u| + |K_{·b} u_b|)_i / M_i`, the size of the terms cancelling in `K u / M`.
    fn stiffness_magnitude(&self, u: &[f64], boundary: f64) -> Vec<f64> {
        let abs = SymTridiag {
            diag: self.k.diag.iter().map(|x| x.abs()).collect(),
            off: self.k.off.iter().map(|x| x.abs()).collect(),
        };
        let ua: Vec<f64> = u.iter().map(|x| x.abs()).collect();
        let mut out = abs.matvec(&ua);
        let n = self.len();
        out[n - 1] += (self.boundary_coupling * boundary).abs();
        out.iter().zip(&self.lumped).map(|(a, m)| a / m).collect()
    }

    /// Max over nodes of `|K u + M(h f(u) - g(u))|_i / (|K||u| + M(|h f(u)| + |g(u)|))_i` (zero boundary value).
    fn relative_residual(&self, u: &[f64], g: Oriented, f: Oriented) -> Result<f64> {
        let r = self.residual(u, 0.0, g, f)?;
        let size = self.stiffness_magnitude(u, 0.0);
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            let denom = size[i] + (self.h[i] * f.value(u[i])?).abs() + g.value(u[i])?.abs();
            if denom > 0.0 {
                worst = worst.max(r[i].abs() / denom);
            }
        }
        Ok(worst)
    }

    /// `(K u + K_{·b} u_b)_i / M_i + h_i f(u_i) - g(u_i)`.
    fn residual(&self, u: &[f64], boundary: f64, g: Oriented, f: Oriented) -> Result<Vec<f64>> {
        let mut ku = self.k.matvec(u);
        let n = self.len();
        ku[n - 1] += self.boundary_coupling * boundary;
        (0..n).map(|i| Ok(ku[i] / self.lumped[i] + self.h[i] * f.value(u[i])? - g.value(u[i])?)).collect()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Constant of the monotone scheme on the order interval `[lo, hi]`.
fn scheme_constant(d: &Discrete, g: Oriented, f: Oriented, lo: f64, hi: f64) -> Result<f64> {
    let hmax = d.h.iter().fold(0.0f64, |m, &v| m.max(v));
    Ok(g.lipschitz(lo, hi)? + hmax * f.lipschitz(lo, hi)? + 1e-12)
}

/// One step of `(K + cM_L) u_+ = M_L(g(u) - h f(u) + c u)`, `u_+(1) = 0`.
fn monotone_step(d: &Discrete, u: &[f64], c: f64, g: Oriented, f: Oriented) -> Result<Vec<f64>> {
    let mut a = d.k.clone();
    for i in 0..d.len() {
        a.diag[i] += c * d.lumped[i];
    }
    let rhs: Vec<f64> = (0..d.len())
        .map(|i| Ok(d.lumped[i] * (g.value(u[i])? - d.h[i] * f.value(u[i])? + c * u[i])))
        .collect::<Result<_>>()?;
    a.solve(&rhs)
}

/// Builds the ordered pair and iterates; `g`, `f` are already oriented so that the target solution is positive.
fn positive_solution(
    spec: &DegenerateSpec,
    grid: &RadialGrid,
    d: &Discrete,
    g: Oriented,
    f: Oriented,
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<SignedSolution> {
    let n = d.len();
    // subsolution t·e_1
    let (_, e1) = d.first_pair(0.0)?;
    let mut t = 1.0;
    let sub = loop {
        let v: Vec<f64> = e1.iter().map(|x| t * x).collect();
        if d.residual(&v, 0.0, g, f)?.iter().all(|&r| r <= 0.0) {
            break v;
        }
        t *= 0.5;
        if t < 1e-12 {
            return Err(Error::Existence("no subsolution of the form t·e_1 (is g'(0) > λ_1?)".into()));
        }
    };
    // supersolution t·ψ with (K + μH - λ)ψ = 0 in the interior, ψ(1) = 1;
    // every admissible μ is tried and the lowest supersolution kept
    let is_super = |v: &[f64], t: f64| -> Result<bool> {
        // on h = 0 the residual vanishes identically, so allow rounding there
        let size = d.stiffness_magnitude(v, t);
        let res = d.residual(v, t, g, f)?;
        let floor = |i: usize| -1e-10 * (1.0 + size[i] + lambda.abs() * v[i].abs());
        Ok(v.iter().zip(&sub).all(|(a, b)| a >= b) && (0..n).all(|i| res[i] >= floor(i)))
    };
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut admissible = false;
    for mu in mu_sweep() {
        let (lam_mu, _) = d.first_pair(mu)?;
        if !(lam_mu > lambda * (1.0 + 1e-9)) {
            continue;
        }
        admissible = true;
        let mut a = d.k.clone();
        for i in 0..n {
            a.diag[i] += (mu * d.h[i] - lambda) * d.lumped[i];
        }
        let mut rhs = vec![0.0; n];
        rhs[n - 1] = -d.boundary_coupling;
        let psi = a.solve(&rhs)?;
        if psi.iter().any(|&p| !(p > 0.0)) {
            // ψ decays like e^{-√μ(1-r)} and underflows for large μ
            continue;
        }
        let scaled = |t: f64| -> Vec<f64> { psi.iter().map(|x| t * x).collect() };
        let mut hi = 1.0;
        while !is_super(&scaled(hi), hi)? {
            hi *= 2.0;
            if hi > 1e30 {
                break;
            }
        }
        if hi > 1e30 {
            continue;
        }
        let mut lo = hi / 2.0;
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if is_super(&scaled(mid), mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let v = scaled(hi);
        let top = max_abs(&v);
        if best.as_ref().map_or(true, |b| top < max_abs(&b.2)) {
            best = Some((mu, hi, v));
        }
    }
    if !admissible {
        return Err(Error::Existence(format!(
            "λ_1(μ) stays at or below λ = {lambda} for every μ up to 1e8; no supersolution"
        )));
    }
    let (mu, _, sup) = best.ok_or_else(|| Error::Existence("no supersolution of the form t·ψ".into()))?;
    // monotone iteration from both ends
    let mut lower = sub.clone();
    let mut upper = sup.clone();
    let mut iterations = 0;
    let mut bracket_gap = max_abs(&sup);
    while iterations < max_iter {
        let lo = lower.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        let hi = upper.iter().fold(0.0f64, |m, &v| m.max(v));
        let c = scheme_constant(d, g, f, lo, hi)?;
        let next_lower = monotone_step(d, &lower, c, g, f)?;
        let next_upper = monotone_step(d, &upper, c, g, f)?;
        iterations += 1;
        let slack = 1e-12 * (1.0 + hi);
        if (0..n).any(|i| {
            next_lower[i] < lower[i] - slack
                || next_upper[i] > upper[i] + slack
                || next_lower[i] > next_upper[i] + slack
        }) {
            return Err(Error::Contract(format!("monotone iteration lost order at step {iterations}")));
        }
        lower = next_lower;
        upper = next_upper;
        bracket_gap = (0..n).map(|i| upper[i] - lower[i]).fold(0.0f64, f64::max);
        if bracket_gap < tol {
            break;
        }
    }
    let mut u = lower;
    // Newton polish
    let mut residual = d.relative_residual(&u, g, f)?;
    for _ in 0..50 {
        if residual < 10.0 * tol {
            break;
        }
        let r = d.residual(&u, 0.0, g, f)?;
        let mut jac = d.k.clone();
        for i in 0..n {
            jac.diag[i] += d.lumped[i] * (d.h[i] * f.derivative(u[i])? - g.derivative(u[i])?);
        }
        let rhs: Vec<f64> = (0..n).map(|i| -r[i] * d.lumped[i]).collect();
        let delta = jac.solve(&rhs)?;
        u.iter_mut().zip(&delta).for_each(|(x, dx)| *x += dx);
        residual = d.relative_residual(&u, g, f)?;
    }
    if residual >= 10.0 * tol {
        return Err(Error::Contract(format!("solution residual {residual:.3e} above {:.3e}", 10.0 * tol)));
    }
    let slack = 10.0 * tol;
    let ordered = (0..n).all(|i| sub[i] <= u[i] + slack && u[i] <= sup[i] + slack);
    if u.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Contract("solution is not of one strict sign".into()));
    }
    let s = g.s;
    let mut nodal: Vec<f64> = u.iter().map(|&x| s * x).collect();
    nodal.push(0.0);
    let u_r = grid.differentiate(&nodal);
    let label = if s > 0.0 { "positive" } else { "negative" };
    let profile = RadialProfile::new(grid.clone(), nodal, u_r, spec.params, label)?;
    let orient = |v: Vec<f64>| v.into_iter().map(|x| s * x).collect();
    Ok(SignedSolution { profile, sub: orient(sub), sup: orient(sup), mu, iterations, bracket_gap, residual, ordered })
}

/// One positive and one negative solution from ordered sub/supersolution pairs.
///
/// The grid must contain `ρ` as a node; the free nodes are `[r_min, 1)`.
pub fn signed_solutions(
    spec: &DegenerateSpec,
    grid: &RadialGrid,
    max_iter: usize,
    tol: f64,
) -> Result<SignedSolutionReport> {
    if !(tol > 0.0) {
        return Err(Error::Parameter("tol must be positive".into()));
    }
    spec.check_grid(grid)?;
    if grid.nodes()[grid.len() - 2] <= spec.rho {
        return Err(Error::Parameter("the grid has no node inside (rho, 1)".into()));
    }
    let lambda = spec.lambda()?;
    let d = Discrete::new(spec, grid)?;
    let lambda1_ball = d.first_pair(0.0)?.0;
    let slope0 = spec.g.derivative(0.0)?;
    if !(slope0 > lambda1_ball) {
        return Err(Error::Precondition(format!("g'(0) = {slope0} must exceed λ_1 = {lambda1_ball}")));
    }
    if !(lambda > lambda1_ball) {
        return Err(Error::Precondition(format!("λ = {lambda} must exceed λ_1 = {lambda1_ball}")));
    }
    let (curve, inner) = rayon::join(|| lambda1_curve(spec, &mu_sweep(), grid), || lambda1_inner(spec, grid));
    let (curve, inner) = (curve?, inner?);
    let side = |s: f64| {
        positive_solution(spec, grid, &d, Oriented { f: &spec.g, s }, Oriented { f: &spec.f, s }, lambda, max_iter, tol)
    };
    let (pos, neg) = rayon::join(|| side(1.0), || side(-1.0));
    let (pos, neg) = (pos?, neg?);
    Ok(SignedSolutionReport {
        iterations: pos.iterations + neg.iterations,
        ordering_certificate: pos.ordered && neg.ordered,
        positive_solution: Some(pos),
        negative_solution: Some(neg),
        lambda1_mu_curve: curve,
        lambda1_ball,
        lambda1_inner: inner,
    })
}
