//! Explicit radial solutions.
//!
//! * Ψ-profiles: `u(r) = ∫_r^1 Ψ(s^N) s^{1-N} ds` with `Ψ(t) = t` up to `r0^N`
//!   and a concave saturating extension beyond, bounded by `κ_N r0^N`,
//!   `κ_N = N / (2√(N-1))`. They solve `-Δu = f(u)` with `f(u(r)) = NΨ'(r^N)`.
//! * Hardy–Hénon families: `u = c|log r|` when `N = 10 + 4α` and `u = r^γ - 1`
//!   when `N > 10 + 4α`.

use crate::error::{Error, Result};
use crate::grid::{integrate_fn, RadialGrid};
use crate::nonlinearity::{Nonlinearity, Table};
use crate::params::ProblemParams;

/// A radial function sampled at the grid nodes together with `u_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub grid: RadialGrid,
    pub u: Vec<f64>,
    pub u_r: Vec<f64>,
    pub params: ProblemParams,
    pub label: String,
    /// `u(0)` when the profile is bounded and the value is known in closed form.
    pub center: Option<f64>,
}

impl RadialProfile {
    pub fn new(
        grid: RadialGrid,
        u: Vec<f64>,
        u_r: Vec<f64>,
        params: ProblemParams,
        label: impl Into<String>,
    ) -> Result<Self> {
        if u.len() != grid.len() || u_r.len() != grid.len() {
            return Err(Error::Parameter("profile samples must match the grid".into()));
        }
        Ok(Self { grid, u, u_r, params, label: label.into(), center: None })
    }

    pub fn with_center(mut self, center: f64) -> Self {
        self.center = Some(center);
        self
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    /// `u(1)`.
    pub fn boundary_value(&self) -> f64 {
        *self.u.last().unwrap()
    }
}

/// `Ψ_{r0}` of the counterexample construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiProfile {
    pub params: ProblemParams,
    pub r0: f64,
    pub kappa: f64,
    /// `(κ - 1) r0^N`: height and decay length of the extension.
    pub extension_scale: f64,
}

/// `κ_N = N / (2√(N-1))`.
pub fn kappa(dim: u32) -> f64 {
    let n = dim as f64;
    n / (2.0 * (n - 1.0).sqrt())
}

pub fn psi_profile(params: ProblemParams, r0: f64) -> Result<PsiProfile> {
    if params.dim() < 3 {
        return Err(Error::Unsupported("N = 2 gives κ_N = 1: no room for a bounded concave extension".into()));
    }
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(Error::Parameter(format!("r0 must lie in (0, 1), got {r0}")));
    }
    let k = kappa(params.dim());
    Ok(PsiProfile { params, r0, kappa: k, extension_scale: (k - 1.0) * r0.powi(params.dim() as i32) })
}

impl PsiProfile {
    /// Junction point `r0^N`.
    pub fn junction(&self) -> f64 {
        self.r0.powi(self.params.dim() as i32)
    }

    /// `Ψ(t)`; identity up to the junction, `κ r0^N - (κ-1) r0^N e^{-(t - r0^N)/((κ-1) r0^N)}` beyond.
    pub fn psi(&self, t: f64) -> f64 {
        let t0 = self.junction();
        if t <= t0 {
            t
        } else {
            let c = self.extension_scale;
            self.kappa * t0 - c * (-(t - t0) / c).exp()
        }
    }

    pub fn psi_prime(&self, t: f64) -> f64 {
        let t0 = self.junction();
        if t <= t0 {
            1.0
        } else {
            (-(t - t0) / self.extension_scale).exp()
        }
    }

    /// Second derivative; the left limit (0) is used at the junction itself.
    pub fn psi_second(&self, t: f64) -> f64 {
        let t0 = self.junction();
        if t <= t0 {
            0.0
        } else {
            let c = self.extension_scale;
            -(-(t - t0) / c).exp() / c
        }
    }

    /// Upper bound `κ_N r0^N` of the extension.
    pub fn bound(&self) -> f64 {
        self.kappa * self.junction()
    }

    /// `u_r(r) = -r^{1-N} Ψ(r^N)`.
    pub fn u_r(&self, r: f64) -> f64 {
        let n = self.params.dim() as i32;
        -self.psi(r.powi(n)) * r.powi(1 - n)
    }

    /// `f(u(r)) = N Ψ'(r^N)`.
    pub fn f_along(&self, r: f64) -> f64 {
        let n = self.params.dim() as i32;
        n as f64 * self.psi_prime(r.powi(n))
    }

    /// `f'(u(r)) = -N² r^{2(N-1)} Ψ''(r^N) / Ψ(r^N)`.
    pub fn fprime_along(&self, r: f64) -> f64 {
        let n = self.params.dim() as i32;
        let t = r.powi(n);
        let nn = n as f64;
        -nn * nn * r.powi(2 * (n - 1)) * self.psi_second(t) / self.psi(t)
    }
}

fn check_anchor(psi: &PsiProfile, grid: &RadialGrid) -> Result<()> {
    match grid.anchor() {
        Some(a) if a == psi.r0 => Ok(()),
        _ => Err(Error::Precondition(format!("grid must be anchored at r0 = {}", psi.r0))),
    }
}

/// Samples `u(r) = ∫_r^1 Ψ(s^N) s^{1-N} ds` on the grid (cellwise quadrature of the exact integrand).
pub fn synthesize_solution(psi: &PsiProfile, grid: &RadialGrid) -> Result<RadialProfile> {
    check_anchor(psi, grid)?;
    let n = psi.params.dim() as i32;
    let nodes = grid.nodes();
    // Ψ(s^N)/s^N against the weight s: bounded integrand, equal to 1 on the plateau.
    let integrand = |s: f64| {
        let t = s.powi(n);
        psi.psi(t) / t
    };
    let mut u = vec![0.0; nodes.len()];
    for k in (0..nodes.len() - 1).rev() {
        let cell = integrate_fn(integrand, grid, 1.0, nodes[k], nodes[k + 1])?;
        u[k] = u[k + 1] + cell;
    }
    let u_r: Vec<f64> = nodes.iter().map(|&r| psi.u_r(r)).collect();
    let i0 = grid.index_of(psi.r0).expect("anchor is a node");
    let center = u[i0] + 0.5 * psi.r0 * psi.r0;
    let label = format!("psi-profile N={} r0={}", n, psi.r0);
    Ok(RadialProfile::new(grid.clone(), u, u_r, psi.params, label)?.with_center(center))
}

/// Tabulated `f` along the synthesized profile (plus the centre value `u(0)`).
pub fn recover_nonlinearity(psi: &PsiProfile, grid: &RadialGrid) -> Result<Nonlinearity> {
    let profile = synthesize_solution(psi, grid)?;
    recover_from_profile(psi, &profile)
}

pub fn recover_from_profile(psi: &PsiProfile, profile: &RadialProfile) -> Result<Nonlinearity> {
    let mut rows: Vec<(f64, f64, f64)> =
        profile.nodes().iter().zip(&profile.u).map(|(&r, &u)| (u, psi.f_along(r), psi.fprime_along(r))).collect();
    let n = psi.params.n();
    rows.push((profile.center.expect("psi profiles carry u(0)"), n, 0.0));
    Ok(Nonlinearity::Tabulated(Table::new(rows)?))
}

/// `γ(N,α)`, `s_α` and the threshold `10 + 4α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HHExponents {
    pub gamma: f64,
    pub s_alpha: f64,
    pub critical_dim: f64,
}

impl HHExponents {
    /// Exponents for a real dimension (the threshold `10 + 4α` is rarely an integer).
    pub fn for_real_dim(n: f64, alpha: f64) -> Result<Self> {
        if !(alpha > -2.0) {
            return Err(Error::Parameter(format!("alpha must be > -2, got {alpha}")));
        }
        if !(n >= 2.0) {
            return Err(Error::Parameter(format!("dimension must be >= 2, got {n}")));
        }
        let root = ((alpha + 2.0) * (alpha + 2.0 * n - 2.0)).sqrt();
        let critical_dim = 10.0 + 4.0 * alpha;
        let mut gamma = 2.0 - n / 2.0 + alpha / 2.0 + root / 2.0;
        if (n - critical_dim).abs() <= 1e-12 * critical_dim.abs().max(1.0) {
            gamma = 0.0;
        }
        Ok(Self { gamma, s_alpha: -alpha / 2.0 - root / 2.0, critical_dim })
    }

    /// Exponent of the band bound `∫_{r/2}^r u_r² ≲ r^{3-N+α+√((2+α)(2N-2+α))}`.
    pub fn band_exponent(n: f64, alpha: f64) -> f64 {
        3.0 - n + alpha + ((2.0 + alpha) * (2.0 * n - 2.0 + alpha)).sqrt()
    }
}

pub fn gamma_exponent(params: &ProblemParams) -> Result<HHExponents> {
    HHExponents::for_real_dim(params.n(), params.alpha())
}

/// Which explicit Hardy–Hénon solution to build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HhCase {
    /// `u = c·|log r|`, `f(u) = c(N-2) e^{(2+α)u/c}`; requires `N = 10 + 4α`.
    Critical { scale: f64 },
    /// `u = r^γ - 1`, `f(u) = (-γ)(γ+N-2)(1+u)^{1+(2+α)/(-γ)}`; requires `N > 10+4α`, `γ(N,α) <= γ < 0`.
    Supercritical { gamma: f64 },
}

/// Closed forms of an explicit Hardy–Hénon solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplicitHh {
    pub params: ProblemParams,
    pub case: HhCase,
}

impl ExplicitHh {
    pub fn new(params: ProblemParams, case: HhCase) -> Result<Self> {
        let n = params.n();
        let crit = params.critical_dim();
        match case {
            HhCase::Critical { scale } => {
                if (n - crit).abs() > 1e-12 {
                    return Err(Error::Parameter(format!("critical case needs N = 10 + 4α = {crit}, got N = {n}")));
                }
                if !(scale > 0.0) {
                    return Err(Error::Parameter("log scale must be positive".into()));
                }
            }
            HhCase::Supercritical { gamma } => {
                if !(n > crit) {
                    return Err(Error::Parameter(format!(
                        "supercritical case needs N > 10 + 4α = {crit}, got N = {n}"
                    )));
                }
                let g0 = gamma_exponent(&params)?.gamma;
                if !(gamma >= g0 - 1e-12 && gamma < 0.0) {
                    return Err(Error::Parameter(format!("gamma must lie in [γ(N,α), 0) = [{g0}, 0), got {gamma}")));
                }
            }
        }
        Ok(Self { params, case })
    }

    pub fn u(&self, r: f64) -> f64 {
        match self.case {
            HhCase::Critical { scale } => -scale * r.ln(),
            HhCase::Supercritical { gamma } => r.powf(gamma) - 1.0,
        }
    }

    pub fn u_r(&self, r: f64) -> f64 {
        match self.case {
            HhCase::Critical { scale } => -scale / r,
            HhCase::Supercritical { gamma } => gamma * r.powf(gamma - 1.0),
        }
    }

    pub fn u_rr(&self, r: f64) -> f64 {
        match self.case {
            HhCase::Critical { scale } => scale / (r * r),
            HhCase::Supercritical { gamma } => gamma * (gamma - 1.0) * r.powf(gamma - 2.0),
        }
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        let n = self.params.n();
        let a2 = 2.0 + self.params.alpha();
        match self.case {
            HhCase::Critical { scale } => Nonlinearity::Exponential { coeff: scale * (n - 2.0), rate: a2 / scale },
            HhCase::Supercritical { gamma } => {
                Nonlinearity::Power { coeff: -gamma * (gamma + n - 2.0), exponent: 1.0 + a2 / (-gamma), shift: 1.0 }
            }
        }
    }

    /// `-(u'' + (N-1)u_r/r) - r^α f(u)` from the closed forms.
    pub fn residual(&self, r: f64) -> f64 {
        let n = self.params.n();
        let f = self.nonlinearity().value(self.u(r)).expect("analytic");
        -(self.u_rr(r) + (n - 1.0) * self.u_r(r) / r) - r.powf(self.params.alpha()) * f
    }

    /// `r² · r^α f'(u(r))`, constant in `r` for both families.
    pub fn stability_weight(&self) -> f64 {
        let n = self.params.n();
        let alpha = self.params.alpha();
        match self.case {
            HhCase::Critical { .. } => (n - 2.0) * (2.0 + alpha),
            HhCase::Supercritical { gamma } => (-gamma + alpha + 2.0) * (gamma + n - 2.0),
        }
    }

    pub fn sample(&self, grid: &RadialGrid) -> Result<RadialProfile> {
        let u = grid.nodes().iter().map(|&r| self.u(r)).collect();
        let u_r = grid.nodes().iter().map(|&r| self.u_r(r)).collect();
        let label = match self.case {
            HhCase::Critical { scale } => {
                format!("critical {scale}|log r| N={}", self.params.dim())
            }
            HhCase::Supercritical { gamma } => format!("r^{gamma}-1 N={}", self.params.dim()),
        };
        RadialProfile::new(grid.clone(), u, u_r, self.params, label)
    }
}

pub fn explicit_hh_solution(
    params: ProblemParams,
    case: HhCase,
    grid: &RadialGrid,
) -> Result<(RadialProfile, Nonlinearity)> {
    let sol = ExplicitHh::new(params, case)?;
    Ok((sol.sample(grid)?, sol.nonlinearity()))
}
