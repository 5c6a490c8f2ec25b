//! Norms, energies and empirical constants of pointwise and integral bounds.
//!
//! Constants are never assumed: each verifier returns the ratio series
//! `quantity / bound`, its supremum and, through [`with_refinement`], the
//! relative change of that supremum when the grid is refined.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{integrate, integrate_fn, GridKind, RadialGrid, DEFAULT_R_MIN};
use crate::nonlinearity::Nonlinearity;
use crate::params::ProblemParams;
use crate::profiles::{gamma_exponent, psi_profile, synthesize_solution, HHExponents, RadialProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateCheck {
    pub name: String,
    /// `(parameter, ratio)` pairs; the parameter is `r`, `r0` or `m` depending on the check.
    pub ratio_series: Vec<(f64, f64)>,
    pub sup_ratio: f64,
    pub fitted_slope: Option<f64>,
    /// RMS residual of the log-log fit.
    pub fit_residual: Option<f64>,
    /// `|sup'/sup - 1|` between the grid and its refinement.
    pub refinement_drift: Option<f64>,
}

impl EstimateCheck {
    fn from_series(name: impl Into<String>, ratio_series: Vec<(f64, f64)>) -> Self {
        let sup_ratio = ratio_series.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.1));
        Self {
            name: name.into(),
            ratio_series,
            sup_ratio,
            fitted_slope: None,
            fit_residual: None,
            refinement_drift: None,
        }
    }

    /// Finite supremum and, when measured, drift below `max_drift`.
    pub fn passes(&self, max_drift: f64) -> bool {
        self.sup_ratio.is_finite() && self.refinement_drift.map_or(true, |d| d < max_drift)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub energy: f64,
    pub first_variation_residual: f64,
    pub ur_sign_ok: bool,
    pub l1_norm: f64,
    /// `(p, ‖u‖_p)` for `p ∈ {2, 4, ∞}`.
    pub lp_norms: Vec<(f64, f64)>,
    pub h1_annulus_norm: f64,
}

/// Least-squares slope and RMS residual of `y` against `x`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 3 {
        return Err(Error::Data(format!("fit needs at least 3 points, got {}", points.len())));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("fit abscissae are all equal".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok((slope, intercept, rms))
}

/// `‖u‖_{L^p(B_1)} = (ω_N ∫_0^1 |u|^p r^{N-1} dr)^{1/p}`; `p = ∞` uses the nodes and `u(0)` if known.
pub fn lp_norm(profile: &RadialProfile, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("p must be >= 1, got {p}")));
    }
    if p.is_infinite() {
        let nodal = profile.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        return Ok(profile.center.map_or(nodal, |c| nodal.max(c.abs())));
    }
    let vals: Vec<f64> = profile.u.iter().map(|v| v.abs().powf(p)).collect();
    let n = profile.params.n();
    let integral = integrate(&vals, &profile.grid, n - 1.0, 0.0, 1.0)?;
    Ok((profile.params.sphere_area() * integral.max(0.0)).powf(1.0 / p))
}

/// `‖∇u‖²_{L²(B_1∖B_{1/2})}`.
pub fn gradient_annulus_sq(profile: &RadialProfile) -> Result<f64> {
    let n = profile.params.n();
    let g = |r: f64| profile.grid.interpolate(&profile.u_r, r).powi(2);
    Ok(profile.params.sphere_area() * integrate_fn(g, &profile.grid, n - 1.0, 0.5, 1.0)?)
}

/// Full `‖u‖_{H¹(B_1∖B_{1/2})}` (function plus gradient).
pub fn h1_annulus_norm(profile: &RadialProfile) -> Result<f64> {
    let n = profile.params.n();
    let g = |r: f64| profile.grid.interpolate(&profile.u, r).powi(2);
    let l2 = profile.params.sphere_area() * integrate_fn(g, &profile.grid, n - 1.0, 0.5, 1.0)?;
    Ok((l2 + gradient_annulus_sq(profile)?).sqrt())
}

/// Default grid used by the counterexample sweeps.
fn sweep_grid(nodes: usize, r0: f64) -> Result<RadialGrid> {
    RadialGrid::new(GridKind::Graded, nodes, DEFAULT_R_MIN, Some(r0))
}

fn counterexample_quotient(params: ProblemParams, p: f64, q: f64, r0: f64, nodes: usize) -> Result<f64> {
    let psi = psi_profile(params, r0)?;
    let prof = synthesize_solution(&psi, &sweep_grid(nodes, r0)?)?;
    Ok(lp_norm(&prof, p)? / lp_norm(&prof, q)?)
}

/// Log-log slope of `‖u_{r0}‖_p / ‖u_{r0}‖_q` against `r0` over the counterexample family.
pub fn quotient_scaling_fit(
    params: ProblemParams,
    p: f64,
    q: f64,
    r0_list: &[f64],
    nodes: usize,
) -> Result<EstimateCheck> {
    if !(1.0 <= q && q <= p) {
        return Err(Error::Parameter(format!("need 1 <= q <= p, got p = {p}, q = {q}")));
    }
    let eval = |n: usize| -> Result<Vec<(f64, f64)>> {
        r0_list.par_iter().map(|&r0| Ok((r0, counterexample_quotient(params, p, q, r0, n)?))).collect()
    };
    let series = eval(nodes)?;
    let usable: Vec<(f64, f64)> =
        series.iter().filter(|s| s.1.is_finite() && s.1 > 0.0).map(|s| (s.0.ln(), s.1.ln())).collect();
    let (slope, _, rms) = linear_fit(&usable)?;
    let fine = eval(2 * nodes - 1)?;
    let drift = series.iter().zip(&fine).map(|(a, b)| (b.1 / a.1 - 1.0).abs()).fold(0.0f64, f64::max);
    let mut check = EstimateCheck::from_series(format!("L{p}/L{q} quotient scaling, N={}", params.dim()), series);
    check.fitted_slope = Some(slope);
    check.fit_residual = Some(rms);
    check.refinement_drift = Some(drift);
    Ok(check)
}

/// Which bound of the pointwise estimate applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointwiseCase {
    /// `N < 10 + 4α`: `|u| ≤ C ‖u‖_{H¹(ann)}`.
    Bounded,
    /// `N = 10 + 4α`: `|u(r)| ≤ C ‖u‖_{H¹(ann)} (|log r| + 1)`.
    Logarithmic,
    /// `N > 10 + 4α`: `|u(r)| ≤ C ‖u‖_{H¹(ann)} r^{γ(N,α)}`.
    Power,
}

impl PointwiseCase {
    pub fn for_params(params: &ProblemParams) -> Self {
        let gap = params.critical_dim() - params.n();
        if gap.abs() <= 1e-12 * params.critical_dim().abs().max(1.0) {
            Self::Logarithmic
        } else if gap > 0.0 {
            Self::Bounded
        } else {
            Self::Power
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Bounded => "bounded",
            Self::Logarithmic => "logarithmic",
            Self::Power => "power",
        }
    }
}

/// One row of a pointwise estimate: `(r, |u(r)|, bound(r), ratio)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseRow {
    pub r: f64,
    pub u_abs: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Rows `|u(r)| / (‖u‖_{H¹(ann)} · bound(r))` at every node.
pub fn pointwise_rows(profile: &RadialProfile) -> Result<(PointwiseCase, Vec<PointwiseRow>)> {
    let params = profile.params;
    let case = PointwiseCase::for_params(&params);
    let h1 = h1_annulus_norm(profile)?;
    if !(h1 > 0.0) {
        return Err(Error::Degenerate("annulus H1 norm vanishes".into()));
    }
    let gamma = gamma_exponent(&params)?.gamma;
    let rows = profile
        .nodes()
        .iter()
        .zip(&profile.u)
        .map(|(&r, &u)| {
            let shape = match case {
                PointwiseCase::Bounded => 1.0,
                PointwiseCase::Logarithmic => r.ln().abs() + 1.0,
                PointwiseCase::Power => r.powf(gamma),
            };
            let bound = h1 * shape;
            PointwiseRow { r, u_abs: u.abs(), bound, ratio: u.abs() / bound }
        })
        .collect();
    Ok((case, rows))
}

pub fn check_pointwise_estimate(profile: &RadialProfile) -> Result<EstimateCheck> {
    let (case, rows) = pointwise_rows(profile)?;
    Ok(EstimateCheck::from_series(
        format!("pointwise {} bound, N={} alpha={}", case.label(), profile.params.dim(), profile.params.alpha()),
        rows.iter().map(|r| (r.r, r.ratio)).collect(),
    ))
}

/// Runs `check` on the profile built on `grid` and on its refinement, recording the drift of `sup_ratio`.
pub fn with_refinement(
    grid: &RadialGrid,
    build: impl Fn(&RadialGrid) -> Result<RadialProfile> + Sync,
    check: impl Fn(&RadialProfile) -> Result<EstimateCheck> + Sync,
) -> Result<EstimateCheck> {
    let fine = grid.refined()?;
    let (coarse, refined) = rayon::join(|| check(&build(grid)?), || check(&build(&fine)?));
    let (mut coarse, refined) = (coarse?, refined?);
    coarse.refinement_drift = Some((refined.sup_ratio / coarse.sup_ratio - 1.0).abs());
    Ok(coarse)
}

/// Test functions `v` with `v(1) = 0` used in the key inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    Zero,
    /// `1 - t`.
    LinearCap,
    /// `r^{s-1} t` on `(0, r)`, `t^s` on `[r, 1/2]`, `2^{1-s}(1-t)` on `(1/2, 1]`.
    BandPower {
        r: f64,
        s: f64,
    },
    /// Linear ramp from `0` at `ε` to `1 - r0` at `r0`, then `1 - t`.
    Ramp {
        eps: f64,
        r0: f64,
    },
    /// `t/(r1-ε)` on `(0, r1-ε)`, `(r1-t)/ε` on `[r1-ε, r1]`, `0` beyond.
    NonvanishingRamp {
        r1: f64,
        eps: f64,
    },
}

impl TestFunction {
    /// `(v(t), v'(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            Self::Zero => (0.0, 0.0),
            Self::LinearCap => (1.0 - t, -1.0),
            Self::BandPower { r, s } => {
                if t < r {
                    (r.powf(s - 1.0) * t, r.powf(s - 1.0))
                } else if t <= 0.5 {
                    (t.powf(s), s * t.powf(s - 1.0))
                } else {
                    let c = 2f64.powf(1.0 - s);
                    (c * (1.0 - t), -c)
                }
            }
            Self::Ramp { eps, r0 } => {
                if t < eps {
                    (0.0, 0.0)
                } else if t <= r0 {
                    let slope = (1.0 - r0) / (r0 - eps);
                    (slope * (t - eps), slope)
                } else {
                    (1.0 - t, -1.0)
                }
            }
            Self::NonvanishingRamp { r1, eps } => {
                if t < r1 - eps {
                    (t / (r1 - eps), 1.0 / (r1 - eps))
                } else if t <= r1 {
                    ((r1 - t) / eps, -1.0 / eps)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    /// Points where `v'` jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::Zero | Self::LinearCap => vec![],
            Self::BandPower { r, .. } => vec![r, 0.5],
            Self::Ramp { eps, r0 } => vec![eps, r0],
            Self::NonvanishingRamp { r1, eps } => vec![r1 - eps, r1],
        }
    }

    /// The family used in the proofs, scaled to the given profile's exponents.
    pub fn proof_suite(params: &ProblemParams) -> Vec<Self> {
        let s = HHExponents::for_real_dim(params.n(), params.alpha()).map(|e| e.s_alpha).unwrap_or(0.0);
        let mut v = vec![Self::Zero, Self::LinearCap];
        for r in [0.4, 0.1, 0.01, 1e-3] {
            v.push(Self::BandPower { r, s });
        }
        for (eps, r0) in [(1e-4, 0.01), (1e-3, 0.1), (0.05, 0.5)] {
            v.push(Self::Ramp { eps, r0 });
        }
        for (r1, eps) in [(0.9, 0.1), (0.5, 0.05), (0.2, 0.01)] {
            v.push(Self::NonvanishingRamp { r1, eps });
        }
        v
    }
}

/// `I(a, b; v) = ∫_a^b t^{N-1} u_r² (v'² + α v'v/t + (1 - N - αN/2) v²/t²) dt`.
pub fn key_integral(profile: &RadialProfile, v: &TestFunction, a: f64, b: f64) -> Result<f64> {
    let n = profile.params.n();
    let alpha = profile.params.alpha();
    let c0 = 1.0 - n - alpha * n / 2.0;
    let grid = &profile.grid;
    let integrand = |t: f64| {
        let ur = grid.interpolate(&profile.u_r, t);
        let (val, der) = v.eval(t);
        ur * ur * (der * der + alpha * der * val / t + c0 * val * val / (t * t))
    };
    let mut cuts: Vec<f64> = vec![a, b];
    cuts.extend(v.breakpoints().into_iter().filter(|&x| x > a && x < b));
    cuts.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        // sample strictly inside each piece so one-sided derivatives are used
        let (lo, hi) = (w[0], w[1]);
        acc +=
            integrate_fn(|t| integrand(t.clamp(lo + 1e-15 * lo.abs(), hi - 1e-15 * hi.abs())), grid, n - 1.0, lo, hi)?;
    }
    Ok(acc)
}

/// `I(r0, 1; v)`.
pub fn key_inequality(profile: &RadialProfile, v: &TestFunction, r0: f64) -> Result<f64> {
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(Error::Parameter(format!("r0 must lie in (0, 1), got {r0}")));
    }
    key_integral(profile, v, r0, 1.0)
}

/// `∫_{r/2}^r u_r² dt` against `‖∇u‖²_{L²(ann)} r^{3-N+α+√((2+α)(2N-2+α))}`.
pub fn ur_band_bound(profile: &RadialProfile, r_list: &[f64]) -> Result<EstimateCheck> {
    let params = profile.params;
    let e = HHExponents::band_exponent(params.n(), params.alpha());
    let g2 = gradient_annulus_sq(profile)?;
    if !(g2 > 0.0) {
        return Err(Error::Degenerate("annulus gradient vanishes".into()));
    }
    let grid = &profile.grid;
    let bands: Vec<(f64, f64)> = r_list
        .par_iter()
        .map(|&r| {
            if !(r > 0.0 && r <= 1.0) || r / 2.0 < grid.r_min() {
                return Err(Error::Parameter(format!("band radius {r} outside the grid")));
            }
            let g = |t: f64| grid.interpolate(&profile.u_r, t).powi(2);
            Ok((r, integrate_fn(g, grid, 0.0, r / 2.0, r)?))
        })
        .collect::<Result<_>>()?;
    let logs: Vec<(f64, f64)> = bands.iter().map(|b| (b.0.ln(), b.1.ln())).collect();
    let fit = linear_fit(&logs).ok();
    let mut check = EstimateCheck::from_series(
        format!("u_r band bound, N={} alpha={}", params.dim(), params.alpha()),
        bands.iter().map(|&(r, b)| (r, b / (g2 * r.powf(e)))).collect(),
    );
    check.fitted_slope = fit.map(|f| f.0);
    check.fit_residual = fit.map(|f| f.2);
    Ok(check)
}

/// `(N-2)²/4 - max_r r^{2+α} f'(u(r))`.
pub fn hardy_stability_margin(profile: &RadialProfile, nonlinearity: &Nonlinearity) -> Result<f64> {
    let n = profile.params.n();
    let a2 = 2.0 + profile.params.alpha();
    let mut worst = f64::NEG_INFINITY;
    for (&r, &u) in profile.nodes().iter().zip(&profile.u) {
        worst = worst.max(r.powf(a2) * nonlinearity.derivative(u)?);
    }
    Ok((n - 2.0).powi(2) / 4.0 - worst)
}

/// Energy, discrete Euler–Lagrange defect, sign of `u_r` and norms.
pub fn diagnostics(profile: &RadialProfile, nonlinearity: &Nonlinearity) -> Result<DiagnosticsReport> {
    let params = profile.params;
    let n = params.n();
    let alpha = params.alpha();
    let grid = &profile.grid;
    let nodes = grid.nodes();
    let big_f: Vec<f64> = profile.u.iter().map(|&u| nonlinearity.antiderivative(u)).collect::<Result<_>>()?;
    let density: Vec<f64> = nodes
        .iter()
        .zip(profile.u_r.iter().zip(&big_f))
        .map(|(&r, (&ur, &bf))| 0.5 * ur * ur - r.powf(alpha) * bf)
        .collect();
    let energy = params.sphere_area() * integrate(&density, grid, n - 1.0, 0.0, 1.0)?;

    // flux balance per cell: -[r^{N-1} u_r] = ∫ r^{N-1+α} f(u) dr
    let flux: Vec<f64> = nodes.iter().zip(&profile.u_r).map(|(&r, &ur)| r.powf(n - 1.0) * ur).collect();
    let mut residual: f64 = 0.0;
    for k in 0..nodes.len() - 1 {
        let bad = std::cell::RefCell::new(None);
        let src = integrate_fn(
            |r| match nonlinearity.value(grid.interpolate(&profile.u, r)) {
                Ok(v) => v,
                Err(e) => {
                    bad.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            grid,
            n - 1.0 + alpha,
            nodes[k],
            nodes[k + 1],
        )?;
        if let Some(e) = bad.into_inner() {
            return Err(e);
        }
        let defect = -(flux[k + 1] - flux[k]) - src;
        let scale = flux[k + 1].abs() + flux[k].abs() + src.abs();
        if scale > 0.0 {
            residual = residual.max(defect.abs() / scale);
        }
    }

    let first = profile.u_r[0];
    let ur_sign_ok = first != 0.0 && profile.u_r.iter().all(|&v| v.signum() == first.signum() && v != 0.0);
    let lp_norms =
        [2.0, 4.0, f64::INFINITY].iter().map(|&p| Ok((p, lp_norm(profile, p)?))).collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticsReport {
        energy,
        first_variation_residual: residual,
        ur_sign_ok,
        l1_norm: lp_norm(profile, 1.0)?,
        lp_norms,
        h1_annulus_norm: h1_annulus_norm(profile)?,
    })
}
