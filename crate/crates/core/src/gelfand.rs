//! The Gelfand branch `-Δu = λ|x|^α f(u)` in `B_1`, `u = 0` on `∂B_1`, by shooting.
//!
//! For an autonomous `f` the initial-value problem
//! `w'' + (N-1)w'/ρ + ρ^α f(w) = 0`, `w(0) = m`, `w'(0) = 0`
//! is integrated to its first zero `R`; then `u(r) = w(Rr)` solves the
//! Dirichlet problem with `λ = R^{2+α}`. The branch is parametrised by `m = u(0)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimates::{lp_norm, EstimateCheck};
use crate::grid::{integrate_fn, RadialGrid};
use crate::nonlinearity::Nonlinearity;
use crate::ode::{integrate_to_points, integrate_to_zero, Method, State};
use crate::params::ProblemParams;
use crate::profiles::RadialProfile;
use crate::spectral::{assemble_pencil, morse_index, QuadraticFormSpec};

/// Size of the leading series correction at the first integration radius, relative to the solution scale.
const SERIES_START: f64 = 1e-4;

/// Relative drop in `λ` that counts as a turning point (smaller drops are integration noise).
const TURN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub m: f64,
    pub lambda: f64,
    pub sup_norm: f64,
    pub l1_norm: f64,
    /// Full `H¹(B_1)` norm.
    pub h1_norm: f64,
    pub radial_morse_index: usize,
    /// Some linearized eigenvalue lies in the zero band.
    pub marginal: bool,
    /// Worst cell flux defect relative to `λ‖f(u)‖_∞ |cell|`.
    pub residual: f64,
    pub profile: RadialProfile,
}

/// Closed-form extremal data for `f = (1+u)^{q_N}`, `N ≥ 11`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalReference {
    pub q: f64,
    /// `-2/(q_N - 1)`.
    pub exponent: f64,
    /// `(2/(q_N-1))(N - 2 - 2/(q_N-1))`.
    pub lambda_star: f64,
}

impl ExtremalReference {
    /// `u*(r) = r^{-2/(q_N-1)} - 1`.
    pub fn profile(&self, r: f64) -> f64 {
        r.powf(self.exponent) - 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchReport {
    pub params: ProblemParams,
    pub points: Vec<BranchPoint>,
    /// `(m, message)` for every failed shot.
    pub failures: Vec<(f64, String)>,
    /// Maximum of `λ` over the sweep.
    pub lambda_max: f64,
    /// `lambda_max` improved by a parabola through the three top points when the maximum is interior.
    pub lambda_star: f64,
    /// `m` of the fitted maximum (the largest `m` when `λ` is increasing throughout).
    pub m_star: f64,
    /// Number of leading points forming the minimal branch (up to the first local maximum).
    pub minimal_len: usize,
    /// Whether `λ(m)` has an interior local maximum in the sweep.
    pub interior_max: bool,
    pub extremal_reference: Option<ExtremalReference>,
}

impl BranchReport {
    pub fn minimal_branch(&self) -> &[BranchPoint] {
        &self.points[..self.minimal_len]
    }

    /// First index whose radial Morse index is positive.
    pub fn first_unstable(&self) -> Option<usize> {
        self.points.iter().position(|p| p.radial_morse_index > 0)
    }

    /// Number of (point pair, node) violations of `u_λ ≤ u_λ'` for consecutive minimal-branch points.
    ///
    /// Near `λ*` consecutive profiles can agree to rounding, so a drop counts only beyond
    /// `1e-9·(1 + |u|)`; pairs whose `λ` decreases are violations at every node.
    pub fn monotonicity_violations(&self) -> usize {
        self.minimal_branch()
            .windows(2)
            .map(|w| {
                let (a, b) = (&w[0].profile.u, &w[1].profile.u);
                if w[1].lambda < w[0].lambda * (1.0 - TURN_TOL) {
                    return a.len();
                }
                (0..a.len()).filter(|&i| b[i] < a[i] - 1e-9 * (1.0 + a[i].abs())).count()
            })
            .sum()
    }
}

/// Numerical settings of a shot.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootOptions {
    pub method: Method,
    pub grid: RadialGrid,
}

impl ShootOptions {
    pub fn new(grid: RadialGrid) -> Self {
        Self { method: Method::default(), grid }
    }
}

/// `q_N = (N - 2√(N-1)) / (N - 2√(N-1) - 4)`, defined for `N ≥ 11`.
pub fn joseph_lundgren_exponent(dim: u32) -> Result<f64> {
    if dim < 11 {
        return Err(Error::Unsupported(format!("q_N requires N >= 11, got {dim}")));
    }
    let n = dim as f64;
    let a = n - 2.0 * (n - 1.0).sqrt();
    Ok(a / (a - 4.0))
}

pub fn extremal_reference(params: &ProblemParams, f: &Nonlinearity) -> Option<ExtremalReference> {
    let q = joseph_lundgren_exponent(params.dim()).ok()?;
    match f {
        Nonlinearity::Power { coeff, exponent, shift }
            if params.alpha() == 0.0 && *coeff == 1.0 && *shift == 1.0 && (exponent - q).abs() < 1e-9 =>
        {
            let e = 2.0 / (q - 1.0);
            Some(ExtremalReference { q, exponent: -e, lambda_star: e * (params.n() - 2.0 - e) })
        }
        _ => None,
    }
}

/// Series coefficients `w = m + a ρ^k + b ρ^{2k}`, `k = 2 + α`.
fn series(params: &ProblemParams, f: &Nonlinearity, m: f64) -> Result<(f64, f64, f64)> {
    let n = params.n();
    let k = 2.0 + params.alpha();
    let a = -f.value(m)? / (k * (k + n - 2.0));
    let b = -f.derivative(m)? * a / (2.0 * k * (2.0 * k + n - 2.0));
    Ok((k, a, b))
}

struct Ivp<'a> {
    params: ProblemParams,
    f: &'a Nonlinearity,
    k: f64,
    a: f64,
    b: f64,
    m: f64,
    start: f64,
}

impl<'a> Ivp<'a> {
    fn new(params: ProblemParams, f: &'a Nonlinearity, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Parameter(format!("m must be positive, got {m}")));
        }
        for i in 0..=16 {
            let u = m * i as f64 / 16.0;
            if !(f.value(u)? > 0.0) || f.derivative(u)? < 0.0 {
                return Err(Error::Shooting(format!(
                    "f must be positive and nondecreasing on [0, m]; fails at u = {u}"
                )));
            }
        }
        let (k, a, b) = series(&params, f, m)?;
        let fm = f.value(m)?;
        let fpm = f.derivative(m)?;
        let scale = if fpm > 0.0 { m.min(fm / fpm) } else { m };
        let start = (SERIES_START * scale / a.abs()).powf(1.0 / k);
        Ok(Self { params, f, k, a, b, m, start })
    }

    fn series_at(&self, rho: f64) -> State {
        let p = rho.powf(self.k);
        [self.m + self.a * p + self.b * p * p, (self.k * self.a * p + 2.0 * self.k * self.b * p * p) / rho]
    }

    fn rhs(&self, rho: f64, y: &State) -> Result<State> {
        let n = self.params.n();
        let weight = if self.params.alpha() == 0.0 { 1.0 } else { rho.powf(self.params.alpha()) };
        Ok([y[1], -(n - 1.0) * y[1] / rho - weight * self.f.value(y[0])?])
    }

    /// Radius by which `w` must have vanished if `f >= f(0) > 0`.
    fn horizon(&self) -> Result<f64> {
        let n = self.params.n();
        let f0 = self.f.value(0.0)?;
        Ok(2.0 * (self.m * self.k * (self.k + n - 2.0) / f0).powf(1.0 / self.k) + 2.0 * self.start)
    }

    fn first_zero(&self, method: Method) -> Result<f64> {
        let rhs = |r: f64, y: &State| self.rhs(r, y);
        let y0 = self.series_at(self.start);
        Ok(integrate_to_zero(&rhs, self.start, y0, self.horizon()?, method)?.r)
    }
}

/// `λ(m)` only (first pass of the shot).
pub fn shoot_lambda(params: ProblemParams, f: &Nonlinearity, m: f64, method: Method) -> Result<f64> {
    let ivp = Ivp::new(params, f, m)?;
    let r = ivp.first_zero(method)?;
    Ok(r.powf(2.0 + params.alpha()))
}

/// Dirichlet solution with `u(0) = m`, its `λ`, norms and radial Morse index.
pub fn shoot(params: ProblemParams, f: &Nonlinearity, m: f64, opts: &ShootOptions) -> Result<BranchPoint> {
    let ivp = Ivp::new(params, f, m)?;
    let big_r = ivp.first_zero(opts.method)?;
    let lambda = big_r.powf(ivp.k);
    let grid = &opts.grid;
    let nodes = grid.nodes();
    let split = nodes.partition_point(|&r| big_r * r <= ivp.start);
    let mut states: Vec<State> = nodes[..split].iter().map(|&r| ivp.series_at(big_r * r)).collect();
    let outputs: Vec<f64> = nodes[split..].iter().map(|&r| big_r * r).collect();
    let rhs = |r: f64, y: &State| ivp.rhs(r, y);
    states.extend(integrate_to_points(&rhs, ivp.start, ivp.series_at(ivp.start), &outputs, opts.method)?);
    let mut u: Vec<f64> = states.iter().map(|s| s[0]).collect();
    let u_r: Vec<f64> = states.iter().map(|s| big_r * s[1]).collect();
    let end = u.last_mut().unwrap();
    if end.abs() > 1e-8 * m {
        return Err(Error::Shooting(format!("boundary value {end} did not vanish")));
    }
    *end = 0.0;
    let profile = RadialProfile::new(grid.clone(), u, u_r, params, format!("gelfand m={m}"))?.with_center(m);
    let lf = f.scaled(lambda);
    let pencil = assemble_pencil(&profile, &lf, &QuadraticFormSpec::ball(params, grid), grid)?;
    let idx = morse_index(&pencil);
    let residual = flux_residual(&profile, &lf)?;
    let l2 = lp_norm(&profile, 2.0)?;
    let grad_sq = {
        let g = |r: f64| grid.interpolate(&profile.u_r, r).powi(2);
        params.sphere_area() * integrate_fn(g, grid, params.n() - 1.0, 0.0, 1.0)?
    };
    Ok(BranchPoint {
        m,
        lambda,
        sup_norm: m,
        l1_norm: lp_norm(&profile, 1.0)?,
        h1_norm: (l2 * l2 + grad_sq).sqrt(),
        radial_morse_index: idx.index,
        marginal: idx.marginal,
        residual,
        profile,
    })
}

/// Worst per-cell defect of `-[r^{N-1}u_r] = ∫ r^{N-1+α} g(u)` relative to `‖g(u)‖_∞ ∫ r^{N-1+α}`.
fn flux_residual(profile: &RadialProfile, g: &Nonlinearity) -> Result<f64> {
    let params = profile.params;
    let w = params.n() - 1.0 + params.alpha();
    let grid = &profile.grid;
    let nodes = grid.nodes();
    let sup = profile.u.iter().map(|&u| g.value(u).map(f64::abs)).try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))?;
    if sup == 0.0 {
        return Ok(0.0);
    }
    let flux: Vec<f64> = nodes.iter().zip(&profile.u_r).map(|(&r, &ur)| r.powf(params.n() - 1.0) * ur).collect();
    let mut worst: f64 = 0.0;
    for k in 0..nodes.len() - 1 {
        let (a, b) = (nodes[k], nodes[k + 1]);
        let src = integrate_fn(|r| g.value(grid.interpolate(&profile.u, r)).unwrap_or(f64::NAN), grid, w, a, b)?;
        let vol = (b.powf(w + 1.0) - a.powf(w + 1.0)) / (w + 1.0);
        let defect = -(flux[k + 1] - flux[k]) - src;
        worst = worst.max(defect.abs() / (sup * vol));
    }
    if worst.is_nan() {
        return Err(Error::Shooting("nonlinearity not evaluable along the profile".into()));
    }
    Ok(worst)
}

/// Vertex of the parabola through three points; `None` if not concave.
fn parabola_vertex(p: [(f64, f64); 3]) -> Option<(f64, f64)> {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let c = (d12 - d01) / (x2 - x0);
    if !(c < 0.0) {
        return None;
    }
    let b = d01 - c * (x0 + x1);
    let xv = -b / (2.0 * c);
    let yv = y1 + d01 * (xv - x1) + c * (xv - x0) * (xv - x1);
    Some((xv, yv))
}

/// Shoots every `m` (in parallel) and identifies the minimal branch and `λ*`.
pub fn trace_branch(
    params: ProblemParams,
    f: &Nonlinearity,
    m_grid: &[f64],
    opts: &ShootOptions,
) -> Result<BranchReport> {
    if m_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter("m grid must be strictly increasing".into()));
    }
    let shots: Vec<(f64, Result<BranchPoint>)> = m_grid.par_iter().map(|&m| (m, shoot(params, f, m, opts))).collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (m, s) in shots {
        match s {
            Ok(p) => points.push(p),
            Err(e) => failures.push((m, e.to_string())),
        }
    }
    if points.is_empty() {
        return Err(Error::Data("no branch point could be computed".into()));
    }
    let turn = (1..points.len().saturating_sub(1)).find(|&i| {
        points[i].lambda >= points[i - 1].lambda && points[i + 1].lambda < points[i].lambda * (1.0 - TURN_TOL)
    });
    let imax = (0..points.len()).max_by(|&i, &j| points[i].lambda.total_cmp(&points[j].lambda)).unwrap();
    let lambda_max = points[imax].lambda;
    let (minimal_len, interior_max) = match turn {
        Some(i) => (i + 1, true),
        None => (points.len(), false),
    };
    let top = turn.unwrap_or(imax);
    let (mut lambda_star, mut m_star) = (points[top].lambda.max(lambda_max), points[top].m);
    if let Some(i) = turn {
        let pick = |j: usize| (points[j].m.ln(), points[j].lambda);
        if let Some((xv, yv)) = parabola_vertex([pick(i - 1), pick(i), pick(i + 1)]) {
            if xv > pick(i - 1).0 && xv < pick(i + 1).0 && yv >= points[i].lambda {
                m_star = xv.exp();
                lambda_star = yv.max(lambda_max);
            }
        }
    }
    Ok(BranchReport {
        params,
        points,
        failures,
        lambda_max,
        lambda_star,
        m_star,
        minimal_len,
        interior_max,
        extremal_reference: extremal_reference(&params, f),
    })
}

/// Summary of the extremal-solution checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalDiagnostics {
    /// Max relative deviation of the near-extremal profile from `r^{-2/(q_N-1)} - 1` on `[0.1, 1)`.
    pub deviation: Option<f64>,
    /// `λ` of the profile used for the deviation.
    pub near_extremal_lambda: f64,
    /// `(m, sup norm)` along the minimal branch; `sup_ratio` is the turning-point estimate `m*`.
    pub sup_norm: EstimateCheck,
    /// `(m, ‖u‖_1)` along the minimal branch.
    pub l1: EstimateCheck,
}

/// Extremal-solution diagnostics; `refined` is the same sweep on a denser `m` grid (for drift).
pub fn extremal_diagnostics(report: &BranchReport, refined: Option<&BranchReport>) -> Result<ExtremalDiagnostics> {
    let near = report
        .points
        .iter()
        .filter(|p| p.lambda >= 0.98 * report.lambda_star)
        .max_by(|a, b| a.lambda.total_cmp(&b.lambda))
        .ok_or_else(|| Error::Data("no branch point within 2% of lambda*".into()))?;
    let deviation = report.extremal_reference.map(|refp| {
        near.profile
            .nodes()
            .iter()
            .zip(&near.profile.u)
            .filter(|(&r, _)| r >= 0.1 && r < 1.0)
            .map(|(&r, &u)| {
                let exact = refp.profile(r);
                (u - exact).abs() / exact.abs()
            })
            .fold(0.0f64, f64::max)
    });
    let build = |rep: &BranchReport| -> (EstimateCheck, EstimateCheck) {
        let minimal = rep.minimal_branch();
        let sup_series: Vec<(f64, f64)> = minimal.iter().map(|p| (p.m, p.sup_norm)).collect();
        let l1_series: Vec<(f64, f64)> = minimal.iter().map(|p| (p.m, p.l1_norm)).collect();
        let sup_max = if rep.interior_max { rep.m_star } else { sup_series.iter().fold(0.0f64, |m, p| m.max(p.1)) };
        let mut l1_max = l1_series.iter().fold(0.0f64, |m, p| m.max(p.1));
        if rep.interior_max {
            l1_max = l1_max.max(interpolate_log_m(&rep.points, rep.m_star, |p| p.l1_norm));
        }
        let mk = |name: &str, series, sup| EstimateCheck {
            name: name.to_string(),
            ratio_series: series,
            sup_ratio: sup,
            fitted_slope: None,
            fit_residual: None,
            refinement_drift: None,
        };
        (mk("minimal-branch sup norm", sup_series, sup_max), mk("minimal-branch L1 norm", l1_series, l1_max))
    };
    let (mut sup_norm, mut l1) = build(report);
    if let Some(fine) = refined {
        let (s2, l2) = build(fine);
        sup_norm.refinement_drift = Some((s2.sup_ratio / sup_norm.sup_ratio - 1.0).abs());
        l1.refinement_drift = Some((l2.sup_ratio / l1.sup_ratio - 1.0).abs());
    }
    Ok(ExtremalDiagnostics { deviation, near_extremal_lambda: near.lambda, sup_norm, l1 })
}

/// Linear interpolation of `value` in `ln m` between the branch points bracketing `m`.
fn interpolate_log_m(points: &[BranchPoint], m: f64, value: impl Fn(&BranchPoint) -> f64) -> f64 {
    let k = points.partition_point(|p| p.m <= m).clamp(1, points.len() - 1);
    let (a, b) = (&points[k - 1], &points[k]);
    let t = (m.ln() - a.m.ln()) / (b.m.ln() - a.m.ln());
    value(a) + t * (value(b) - value(a))
}

/// `count` log-spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> ShootOptions {
        ShootOptions::new(RadialGrid::default_graded(None).unwrap())
    }

    #[test]
    fn constant_source_closed_form() {
        let params = ProblemParams::autonomous(3).unwrap();
        let f = Nonlinearity::Constant { value: 1.0 };
        let p = shoot(params, &f, 1.0, &opts()).unwrap();
        assert!((p.lambda - 6.0).abs() < 1e-9, "{}", p.lambda);
        for (&r, &u) in p.profile.nodes().iter().zip(&p.profile.u) {
            assert!((u - (1.0 - r * r)).abs() < 1e-9);
        }
        assert!(p.residual < 1e-6, "{}", p.residual);
        assert_eq!(p.radial_morse_index, 0);
    }

    #[test]
    fn henon_weight_closed_form() {
        // f ≡ 1: w = m - ρ^{2+α}/((2+α)(N+α)), so λ = m (2+α)(N+α)
        let params = ProblemParams::new(4, 1.0).unwrap();
        let f = Nonlinearity::Constant { value: 1.0 };
        let p = shoot(params, &f, 0.5, &opts()).unwrap();
        assert!((p.lambda - 0.5 * 3.0 * 5.0).abs() < 1e-8, "{}", p.lambda);
    }

    #[test]
    fn small_m_linearization() {
        // λ(m) ≈ 2N m / f(0) as m → 0 for α = 0
        let params = ProblemParams::autonomous(11).unwrap();
        let q = joseph_lundgren_exponent(11).unwrap();
        let f = Nonlinearity::Power { coeff: 1.0, exponent: q, shift: 1.0 };
        let m = 1e-5;
        let lam = shoot_lambda(params, &f, m, Method::default()).unwrap();
        assert!((lam / (22.0 * m) - 1.0).abs() < 1e-3, "{lam}");
        let lam2 = shoot_lambda(params, &f, 2e-5, Method::default()).unwrap();
        assert!(lam2 > lam);
    }

    #[test]
    fn q_n_values() {
        let q = joseph_lundgren_exponent(11).unwrap();
        assert!((q - 6.92207).abs() < 1e-4, "{q}");
        let params = ProblemParams::autonomous(11).unwrap();
        let r = extremal_reference(&params, &Nonlinearity::Power { coeff: 1.0, exponent: q, shift: 1.0 }).unwrap();
        assert!((r.exponent + 0.337721).abs() < 1e-5);
        assert!((r.lambda_star - 2.925506).abs() < 1e-4);
        assert!(joseph_lundgren_exponent(10).is_err());
    }

    #[test]
    fn rk4_order_on_lambda() {
        let params = ProblemParams::autonomous(3).unwrap();
        let f = Nonlinearity::Exponential { coeff: 1.0, rate: 1.0 };
        let l = |h: f64| shoot_lambda(params, &f, 1.0, Method::FixedRk4 { step: h }).unwrap();
        let (a, b, c) = (l(0.04), l(0.02), l(0.01));
        assert!((a - b).abs() / (b - c).abs() >= 8.0, "{a} {b} {c}");
    }

    #[test]
    fn rejects_nonpositive_f() {
        let params = ProblemParams::autonomous(3).unwrap();
        let f = Nonlinearity::Power { coeff: 1.0, exponent: 3.0, shift: 0.0 };
        assert!(matches!(shoot(params, &f, 1.0, &opts()), Err(Error::Shooting(_))));
    }

    #[test]
    fn exponential_branch_turns() {
        let params = ProblemParams::autonomous(3).unwrap();
        let f = Nonlinearity::Exponential { coeff: 1.0, rate: 1.0 };
        let rep = trace_branch(params, &f, &log_grid(0.05, 8.0, 25), &opts()).unwrap();
        assert!(rep.interior_max);
        assert!((rep.lambda_star - 3.32).abs() < 0.01, "{}", rep.lambda_star);
        assert!(rep.minimal_branch().iter().all(|p| p.radial_morse_index == 0));
        let first = rep.first_unstable().unwrap();
        assert!(first >= rep.minimal_len - 1 && first <= rep.minimal_len + 1);
        assert_eq!(rep.monotonicity_violations(), 0);
    }

    #[test]
    fn extremal_profile_is_approached() {
        let params = ProblemParams::autonomous(11).unwrap();
        let q = joseph_lundgren_exponent(11).unwrap();
        let f = Nonlinearity::Power { coeff: 1.0, exponent: q, shift: 1.0 };
        let rep = trace_branch(params, &f, &log_grid(1e-2, 1e4, 13), &opts()).unwrap();
        assert!(!rep.interior_max);
        let d = extremal_diagnostics(&rep, None).unwrap();
        assert!(d.deviation.unwrap() < 1e-6);
        assert!((rep.lambda_star / rep.extremal_reference.unwrap().lambda_star - 1.0).abs() < 1e-6);
    }

    #[test]
    fn vertex_of_parabola() {
        let (x, y) = parabola_vertex([(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).unwrap();
        assert!((x - 1.0).abs() < 1e-14 && (y - 1.0).abs() < 1e-14);
        assert!(parabola_vertex([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).is_none());
    }
}
