//! Second-variation quadratic forms on radial trial spaces.
//!
//! The form `Q(φ) = ∫ (φ'² + l(l+N-2) φ²/r² - V φ²) r^{N-1} dr` is restricted to
//! continuous piecewise-linear functions on the grid, giving a tridiagonal pencil
//! `(K, M)` with `M` the `r^{N-1}`-weighted mass matrix. Negative eigenvalues are
//! counted from the pivots of `K + τM` (Sylvester's law of inertia).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::nonlinearity::Nonlinearity;
use crate::params::ProblemParams;
use crate::profiles::RadialProfile;
use crate::quad::gauss_unit;
use crate::tridiag::{count_below, SymTridiag};

/// Relative size of the zero-eigenvalue band `[-τ, τ]`.
pub const ZERO_BAND: f64 = 1e-8;
/// Hard cap on the angular momentum explored by [`full_morse_index`].
pub const MAX_ANGULAR: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerBoundary {
    /// Trial functions vanish at the inner radius (annuli).
    Dirichlet,
    /// Free value at the inner radius (domains reaching the origin cut-off).
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFormSpec {
    pub params: ProblemParams,
    pub a: f64,
    pub b: f64,
    pub inner: InnerBoundary,
    /// Spherical-harmonic degree `l`; `None` means radial (`l = 0`).
    pub angular: Option<u32>,
}

impl QuadraticFormSpec {
    /// Domain `[ε, 1]` with `ε` the first grid node and a free inner value.
    pub fn ball(params: ProblemParams, grid: &RadialGrid) -> Self {
        Self { params, a: grid.r_min(), b: 1.0, inner: InnerBoundary::Natural, angular: None }
    }

    /// Ball `B_b` cut off at the first grid node.
    pub fn inner_ball(params: ProblemParams, grid: &RadialGrid, b: f64) -> Self {
        Self { params, a: grid.r_min(), b, inner: InnerBoundary::Natural, angular: None }
    }

    /// Annulus `[a, b]` with Dirichlet conditions on both spheres.
    pub fn annulus(params: ProblemParams, a: f64, b: f64) -> Self {
        Self { params, a, b, inner: InnerBoundary::Dirichlet, angular: None }
    }

    pub fn with_angular(mut self, l: u32) -> Self {
        self.angular = Some(l);
        self
    }

    fn angular_coeff(&self) -> f64 {
        let l = self.angular.unwrap_or(0) as f64;
        l * (l + self.params.n() - 2.0)
    }

    fn node_range(&self, grid: &RadialGrid) -> Result<(usize, usize)> {
        if !(self.a < self.b && self.b <= 1.0 && self.a > 0.0) {
            return Err(Error::Parameter(format!("domain [{}, {}] must satisfy 0 < a < b <= 1", self.a, self.b)));
        }
        let ia = grid
            .index_of(self.a)
            .ok_or_else(|| Error::Precondition(format!("domain end {} is not a grid node", self.a)))?;
        let ib = grid
            .index_of(self.b)
            .ok_or_else(|| Error::Precondition(format!("domain end {} is not a grid node", self.b)))?;
        let interior = ib - ia - usize::from(self.inner == InnerBoundary::Dirichlet);
        if interior < 1 {
            return Err(Error::Parameter("domain contains no free nodes".into()));
        }
        Ok((ia, ib))
    }
}

/// Discrete pencil `(K, M)` on the free nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPencil {
    pub stiffness: SymTridiag,
    pub mass: SymTridiag,
    /// Radius of each unknown.
    pub radii: Vec<f64>,
    /// Magnitude of the eigenvalue scale used for the zero band.
    pub scale: f64,
}

impl SpectralPencil {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Half-width `τ` of the zero band.
    pub fn tolerance(&self) -> f64 {
        ZERO_BAND * (1.0 + self.scale)
    }

    /// Number of generalized eigenvalues below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        count_below(&self.stiffness, &self.mass, sigma)
    }

    /// Rayleigh quotient `xᵀKx / xᵀMx`.
    pub fn rayleigh(&self, x: &[f64]) -> f64 {
        self.stiffness.dot(x, x) / self.mass.dot(x, x)
    }
}

/// Negative count together with the boundary-of-stability flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexCount {
    pub index: usize,
    /// Some eigenvalue lies in `[-τ, τ]`.
    pub marginal: bool,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularCount {
    pub l: u32,
    pub count: usize,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorseReport {
    pub radial_index: usize,
    pub full_index: Option<u64>,
    pub per_l_counts: Option<Vec<AngularCount>>,
    pub smallest_eigenvalues: Vec<f64>,
    pub grid_size: usize,
    pub tolerance: f64,
    pub marginal: bool,
}

/// Nodal coefficients of one term of a form, integrated against `r^w`.
struct Term<'a> {
    coeff: &'a [f64],
    exponent: f64,
    factor: f64,
}

/// Assembles `K = ∫ P φ'φ' r^{wp} + Σ c_j ∫ q_j φφ r^{w_j}` and `M = ∫ m φφ r^{wm}` on `[a, b]`,
/// all coefficients linear between nodes.
fn assemble_generic(
    grid: &RadialGrid,
    range: (usize, usize),
    inner: InnerBoundary,
    grad: Term<'_>,
    zeroth: &[Term<'_>],
    mass: Term<'_>,
) -> (SymTridiag, SymTridiag, Vec<f64>) {
    let nodes = grid.nodes();
    let (ia, ib) = range;
    let m = ib - ia + 1;
    let mut kd = vec![0.0; m];
    let mut ko = vec![0.0; m - 1];
    let mut md = vec![0.0; m];
    let mut mo = vec![0.0; m - 1];
    let rule = gauss_unit();
    for c in 0..m - 1 {
        let (k0, k1) = (ia + c, ia + c + 1);
        let (x0, x1) = (nodes[k0], nodes[k1]);
        let h = x1 - x0;
        let (mut g, mut z00, mut z01, mut z11, mut m00, mut m01, mut m11) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let r = x0 + h * t;
            let p1 = *t;
            let p0 = 1.0 - t;
            let lin = |coef: &[f64]| coef[k0] * p0 + coef[k1] * p1;
            g += w * lin(grad.coeff) * r.powf(grad.exponent);
            let mut q = 0.0;
            for term in zeroth {
                q += term.factor * lin(term.coeff) * r.powf(term.exponent);
            }
            z00 += w * q * p0 * p0;
            z01 += w * q * p0 * p1;
            z11 += w * q * p1 * p1;
            let mq = w * mass.factor * lin(mass.coeff) * r.powf(mass.exponent);
            m00 += mq * p0 * p0;
            m01 += mq * p0 * p1;
            m11 += mq * p1 * p1;
        }
        let g = grad.factor * g / h;
        kd[c] += g + z00 * h;
        kd[c + 1] += g + z11 * h;
        ko[c] += -g + z01 * h;
        md[c] += m00 * h;
        md[c + 1] += m11 * h;
        mo[c] += m01 * h;
    }
    // drop the outer Dirichlet node and, if requested, the inner one
    let lo = usize::from(inner == InnerBoundary::Dirichlet);
    let hi = m - 1;
    let k = SymTridiag { diag: kd[lo..hi].to_vec(), off: ko[lo..hi - 1].to_vec() };
    let mm = SymTridiag { diag: md[lo..hi].to_vec(), off: mo[lo..hi - 1].to_vec() };
    let radii = nodes[ia + lo..ia + hi].to_vec();
    (k, mm, radii)
}

/// `V(r_i) = r_i^α f'(u(r_i))` at every node.
pub fn potential_from_profile(profile: &RadialProfile, nonlinearity: &Nonlinearity) -> Result<Vec<f64>> {
    let alpha = profile.params.alpha();
    profile.nodes().iter().zip(&profile.u).map(|(&r, &u)| Ok(r.powf(alpha) * nonlinearity.derivative(u)?)).collect()
}

/// Pencil of `-Δ - V` for a nodal potential `V`.
pub fn assemble_with_potential(
    grid: &RadialGrid,
    potential: &[f64],
    spec: &QuadraticFormSpec,
) -> Result<SpectralPencil> {
    if potential.len() != grid.len() {
        return Err(Error::Parameter("potential must be sampled at every grid node".into()));
    }
    let range = spec.node_range(grid)?;
    let (ia, ib) = range;
    if let Some(i) = (ia..=ib).find(|&i| !potential[i].is_finite()) {
        return Err(Error::Parameter(format!("potential is not finite at r = {}", grid.nodes()[i])));
    }
    let n = spec.params.n();
    let ones = vec![1.0; grid.len()];
    let ang = spec.angular_coeff();
    let mut zeroth = vec![Term { coeff: potential, exponent: n - 1.0, factor: -1.0 }];
    if ang != 0.0 {
        zeroth.push(Term { coeff: &ones, exponent: n - 3.0, factor: ang });
    }
    let (stiffness, mass, radii) = assemble_generic(
        grid,
        range,
        spec.inner,
        Term { coeff: &ones, exponent: n - 1.0, factor: 1.0 },
        &zeroth,
        Term { coeff: &ones, exponent: n - 1.0, factor: 1.0 },
    );
    let scale = potential[ia..=ib].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(SpectralPencil { stiffness, mass, radii, scale })
}

/// Pencil of the second variation at `profile` (potential `r^α f'(u)` from the stored derivative).
pub fn assemble_pencil(
    profile: &RadialProfile,
    nonlinearity: &Nonlinearity,
    spec: &QuadraticFormSpec,
    grid: &RadialGrid,
) -> Result<SpectralPencil> {
    if grid.nodes() != profile.nodes() {
        return Err(Error::Parameter("profile and pencil grids differ".into()));
    }
    let (ia, ib) = spec.node_range(grid)?;
    let alpha = profile.params.alpha();
    let mut v = vec![0.0; grid.len()];
    for i in ia..=ib {
        v[i] = grid.nodes()[i].powf(alpha) * nonlinearity.derivative(profile.u[i])?;
    }
    assemble_with_potential(grid, &v, spec)
}

/// Negative inertia of `K + τM` plus the marginal flag.
pub fn morse_index(pencil: &SpectralPencil) -> IndexCount {
    let tau = pencil.tolerance();
    let below = pencil.count_below(-tau);
    let above = pencil.count_below(tau);
    IndexCount { index: below, marginal: above != below, tolerance: tau }
}

/// The `k` smallest generalized eigenvalues, ascending.
pub fn smallest_eigenvalues(pencil: &SpectralPencil, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > pencil.len() {
        return Err(Error::Parameter(format!("requested {k} eigenvalues of a {}-dimensional pencil", pencil.len())));
    }
    let mut lo = -(pencil.scale + 1.0);
    while pencil.count_below(lo) > 0 {
        lo *= 2.0;
    }
    let mut hi = pencil.scale + 1.0;
    while pencil.count_below(hi) < k {
        hi *= 2.0;
    }
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        // eigenvalue j = inf{σ : count_below(σ) > j}
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if pencil.count_below(mid) > j {
                b = mid;
            } else {
                a = mid;
            }
            if b - a <= 1e-13 * (1.0 + mid.abs()) {
                break;
            }
        }
        let estimate = 0.5 * (a + b);
        out.push(refine(pencil, estimate, a, b));
        lo = a;
    }
    Ok(out)
}

/// Inverse iteration from a bisection estimate; the Rayleigh quotient is kept if it stays in the bracket.
fn refine(pencil: &SpectralPencil, estimate: f64, a: f64, b: f64) -> f64 {
    let width = (b - a).max(1e-14 * (1.0 + estimate.abs()));
    let shift = estimate - 0.5 * width;
    let shifted = pencil.stiffness.axpy(-shift, &pencil.mass);
    let n = pencil.len();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 37 % 11) as f64)).collect();
    for _ in 0..3 {
        let rhs = pencil.mass.matvec(&x);
        match shifted.solve(&rhs) {
            Ok(y) => {
                let norm = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if !(norm.is_finite() && norm > 0.0) {
                    return estimate;
                }
                x = y.into_iter().map(|v| v / norm).collect();
            }
            Err(_) => return estimate,
        }
    }
    let rq = pencil.rayleigh(&x);
    if (rq - estimate).abs() <= 2.0 * width {
        rq
    } else {
        estimate
    }
}

/// Dimension of degree-`l` spherical harmonics in `R^N`: `C(N+l-1, l) - C(N+l-3, l-2)`.
pub fn harmonic_multiplicity(l: u32, dim: u32) -> u64 {
    let binom = |n: u64, k: u64| -> u64 {
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        acc as u64
    };
    let (l, n) = (l as u64, dim as u64);
    let first = binom(n + l - 1, l);
    if l >= 2 {
        first - binom(n + l - 3, l - 2)
    } else {
        first
    }
}

/// Radial and full Morse index of `-Δ - V` on `spec`'s domain by decomposition in spherical harmonics.
pub fn full_morse_index_potential(
    grid: &RadialGrid,
    potential: &[f64],
    spec: &QuadraticFormSpec,
    l_max: u32,
) -> Result<MorseReport> {
    let count_at = |l: u32| -> Result<(usize, bool, f64)> {
        let p = assemble_with_potential(grid, potential, &spec.with_angular(l))?;
        let c = morse_index(&p);
        Ok((c.index, c.marginal, c.tolerance))
    };
    let mut counts: Vec<(usize, bool, f64)> = (0..=l_max).into_par_iter().map(count_at).collect::<Result<_>>()?;
    let mut top = l_max;
    while counts.last().map_or(false, |c| c.0 > 0) {
        if top >= MAX_ANGULAR {
            return Err(Error::Contract(format!("negative directions persist beyond l = {MAX_ANGULAR}")));
        }
        let next = (2 * top + 1).min(MAX_ANGULAR);
        let more: Vec<_> = (top + 1..=next).into_par_iter().map(count_at).collect::<Result<_>>()?;
        counts.extend(more);
        top = next;
    }
    let per_l: Vec<AngularCount> = counts
        .iter()
        .enumerate()
        .map(|(l, c)| AngularCount {
            l: l as u32,
            count: c.0,
            multiplicity: harmonic_multiplicity(l as u32, spec.params.dim()),
        })
        .collect();
    let full = per_l.iter().map(|a| a.count as u64 * a.multiplicity).sum();
    let radial_pencil = assemble_with_potential(grid, potential, &spec.with_angular(0))?;
    let k = counts[0].0.max(1).min(radial_pencil.len());
    Ok(MorseReport {
        radial_index: counts[0].0,
        full_index: Some(full),
        per_l_counts: Some(per_l),
        smallest_eigenvalues: smallest_eigenvalues(&radial_pencil, k)?,
        grid_size: grid.len(),
        tolerance: counts[0].2,
        marginal: counts.iter().any(|c| c.1),
    })
}

/// Radial and full Morse index of the linearization at `profile`.
pub fn full_morse_index(
    profile: &RadialProfile,
    nonlinearity: &Nonlinearity,
    spec: &QuadraticFormSpec,
    l_max: u32,
) -> Result<MorseReport> {
    let (ia, ib) = spec.node_range(&profile.grid)?;
    let alpha = profile.params.alpha();
    let mut v = vec![0.0; profile.grid.len()];
    for i in ia..=ib {
        v[i] = profile.nodes()[i].powf(alpha) * nonlinearity.derivative(profile.u[i])?;
    }
    full_morse_index_potential(&profile.grid, &v, spec, l_max)
}

/// Radial Morse index only.
pub fn radial_index(
    profile: &RadialProfile,
    nonlinearity: &Nonlinearity,
    spec: &QuadraticFormSpec,
) -> Result<IndexCount> {
    Ok(morse_index(&assemble_pencil(profile, nonlinearity, spec, &profile.grid)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// Both sides of `∫_a^b r^{α+1} ω'² ≥ (α²/4) ∫_a^b r^{α-1} ω²` for piecewise-linear nodal `ω`.
pub fn hardy_check(omega: &[f64], a: f64, b: f64, alpha_exp: f64, grid: &RadialGrid) -> Result<HardyCheck> {
    if omega.len() != grid.len() {
        return Err(Error::Parameter("test function must be sampled at every node".into()));
    }
    if !(0.0 < a && a < b && b <= 1.0) || a < grid.r_min() {
        return Err(Error::Parameter(format!("need r_min <= a < b <= 1, got [{a}, {b}]")));
    }
    let nodes = grid.nodes();
    let lin = |r: f64| -> (f64, f64) {
        let k = grid.cell_of(r).expect("inside grid");
        let h = nodes[k + 1] - nodes[k];
        let slope = (omega[k + 1] - omega[k]) / h;
        (omega[k] + slope * (r - nodes[k]), slope)
    };
    let scale = omega.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for end in [a, b] {
        if lin(end).0.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Precondition(format!("test function does not vanish at r = {end}")));
        }
    }
    let rule = gauss_unit();
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let first = grid.cell_of(a).unwrap();
    for k in first..nodes.len() - 1 {
        let l = nodes[k].max(a);
        let u = nodes[k + 1].min(b);
        if u <= l {
            break;
        }
        let h = u - l;
        let slope = (omega[k + 1] - omega[k]) / (nodes[k + 1] - nodes[k]);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let r = l + h * t;
            let val = omega[k] + slope * (r - nodes[k]);
            lhs += w * h * r.powf(alpha_exp + 1.0) * slope * slope;
            rhs += w * h * r.powf(alpha_exp - 1.0) * val * val;
        }
    }
    rhs *= alpha_exp * alpha_exp / 4.0;
    Ok(HardyCheck { lhs, rhs, margin: lhs - rhs })
}

/// Minimum over Dirichlet trial functions on `[r0, 1]` of
/// `∫ r^{N-1} u_r² ω'² / ∫ r^{N-3} u_r² ω²`.
pub fn cc_quotient(profile: &RadialProfile, r0: f64) -> Result<f64> {
    let grid = &profile.grid;
    let spec = QuadraticFormSpec::annulus(profile.params, r0, 1.0);
    let (ia, ib) = spec.node_range(grid)?;
    if let Some(i) = (ia..ib).find(|&i| profile.u_r[i] == 0.0 || !profile.u_r[i].is_finite()) {
        return Err(Error::Degenerate(format!("u_r vanishes at r = {}", grid.nodes()[i])));
    }
    let weight: Vec<f64> = profile.u_r.iter().map(|v| v * v).collect();
    let n = profile.params.n();
    let (stiffness, mass, radii) = assemble_generic(
        grid,
        (ia, ib),
        InnerBoundary::Dirichlet,
        Term { coeff: &weight, exponent: n - 1.0, factor: 1.0 },
        &[],
        Term { coeff: &weight, exponent: n - 3.0, factor: 1.0 },
    );
    let pencil = SpectralPencil { stiffness, mass, radii, scale: n - 1.0 };
    Ok(smallest_eigenvalues(&pencil, 1)?[0])
}
