//! Radial grids on `(0, 1]` and quadrature against power weights `r^w`.
//!
//! Every cell `[r_k, r_{k+1}]` carries the cubic interpolant through the
//! four-node stencil around it. Integrals `∫ g(r) r^w dr` are evaluated per cell
//! with the weight kept exact: a 12-point Gauss–Legendre rule when the cell is
//! well separated from the origin (there `r^w` is analytic on a wide Bernstein
//! ellipse), and closed-form moments `∫ r^{w+j} dr` for the segment touching
//! the origin. Cubic samples are therefore integrated exactly for any `w`.

use crate::error::{Error, Result};
use crate::quad::gauss_unit;

/// Default node count of the graded grid.
pub const DEFAULT_NODES: usize = 2048;
/// Default innermost radius.
pub const DEFAULT_R_MIN: f64 = 1e-6;
/// Minimum number of nodes of any grid.
pub const MIN_NODES: usize = 16;
/// Transition radius of the graded map `z = r + c·ln r`: geometric below, uniform above.
const GRADED_SCALE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Nodes `i/n`, `i = 1..=n`.
    Uniform,
    /// Constant ratio from `r_min` to `1`.
    Geometric,
    /// Geometric near the origin, uniform away from it.
    Graded,
    /// Arbitrary validated node set.
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    kind: GridKind,
    anchor: Option<f64>,
    r_min: f64,
}

/// Builds a grid; thin wrapper over [`RadialGrid::new`].
pub fn make_grid(kind: GridKind, node_count: usize, r_min: f64, anchor: Option<f64>) -> Result<RadialGrid> {
    RadialGrid::new(kind, node_count, r_min, anchor)
}

impl RadialGrid {
    /// `r_min` is ignored for [`GridKind::Uniform`].
    pub fn new(kind: GridKind, node_count: usize, r_min: f64, anchor: Option<f64>) -> Result<Self> {
        if node_count < MIN_NODES {
            return Err(Error::Parameter(format!("grid needs at least {MIN_NODES} nodes, got {node_count}")));
        }
        if kind != GridKind::Uniform && !(r_min > 0.0 && r_min < 1.0) {
            return Err(Error::Parameter(format!("r_min must lie in (0, 1), got {r_min}")));
        }
        let n = node_count;
        let (nodes, transform): (Vec<f64>, fn(f64) -> f64) = match kind {
            GridKind::Uniform => ((1..=n).map(|i| i as f64 / n as f64).collect(), |r| r),
            GridKind::Geometric => {
                let lr = r_min.ln();
                let mut v: Vec<f64> = (0..n).map(|i| (lr * (1.0 - i as f64 / (n - 1) as f64)).exp()).collect();
                v[0] = r_min;
                v[n - 1] = 1.0;
                (v, f64::ln)
            }
            GridKind::Graded => (graded_nodes(n, r_min), graded_z),
            GridKind::Custom => {
                return Err(Error::Parameter("custom grids are built with from_nodes".into()));
            }
        };
        let r_min = nodes[0];
        let mut grid = Self { nodes, kind, anchor: None, r_min };
        if let Some(a) = anchor {
            grid.place_anchor(a, transform)?;
        }
        grid.validate()?;
        Ok(grid)
    }

    /// Graded grid with the default resolution.
    pub fn default_graded(anchor: Option<f64>) -> Result<Self> {
        Self::new(GridKind::Graded, DEFAULT_NODES, DEFAULT_R_MIN, anchor)
    }

    pub fn from_nodes(nodes: Vec<f64>, anchor: Option<f64>) -> Result<Self> {
        let r_min = nodes.first().copied().unwrap_or(0.0);
        let grid = Self { nodes, kind: GridKind::Custom, anchor, r_min };
        grid.validate()?;
        Ok(grid)
    }

    fn place_anchor(&mut self, anchor: f64, transform: fn(f64) -> f64) -> Result<()> {
        let n = self.nodes.len();
        if !(anchor > self.nodes[0] && anchor < 1.0) {
            return Err(Error::Parameter(format!("anchor {anchor} must lie in ({}, 1)", self.nodes[0])));
        }
        let za = transform(anchor);
        let i = (1..n - 1)
            .min_by(|&i, &j| {
                let di = (transform(self.nodes[i]) - za).abs();
                let dj = (transform(self.nodes[j]) - za).abs();
                di.total_cmp(&dj)
            })
            .expect("grid has interior nodes");
        self.nodes[i] = anchor;
        self.anchor = Some(anchor);
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let v = &self.nodes;
        if v.len() < MIN_NODES {
            return Err(Error::Parameter(format!("grid needs at least {MIN_NODES} nodes")));
        }
        if !(v[0] > 0.0) {
            return Err(Error::Parameter("grid nodes must be positive".into()));
        }
        if *v.last().unwrap() != 1.0 {
            return Err(Error::Parameter("last grid node must be 1".into()));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("grid nodes must be strictly increasing".into()));
        }
        if let Some(a) = self.anchor {
            if self.index_of(a).is_none() {
                return Err(Error::Parameter(format!("anchor {a} is not a grid node")));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn anchor(&self) -> Option<f64> {
        self.anchor
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    /// Grid with (roughly) halved cell sizes and the same anchor.
    pub fn refined(&self) -> Result<Self> {
        let n = self.nodes.len();
        match self.kind {
            GridKind::Uniform => Self::new(GridKind::Uniform, 2 * n, 0.0, self.anchor),
            GridKind::Geometric | GridKind::Graded => Self::new(self.kind, 2 * n - 1, self.r_min, self.anchor),
            GridKind::Custom => {
                let mut v = Vec::with_capacity(2 * n - 1);
                for w in self.nodes.windows(2) {
                    v.push(w[0]);
                    v.push(0.5 * (w[0] + w[1]));
                }
                v.push(1.0);
                Self::from_nodes(v, self.anchor)
            }
        }
    }

    /// Index of the node equal to `r` (relative tolerance `1e-13`).
    pub fn index_of(&self, r: f64) -> Option<usize> {
        let k = self.nodes.partition_point(|&x| x < r);
        let tol = 1e-13 * r.abs().max(f64::MIN_POSITIVE);
        [k.wrapping_sub(1), k].into_iter().filter(|&i| i < self.nodes.len()).find(|&i| (self.nodes[i] - r).abs() <= tol)
    }

    /// Cell `k` with `r_k <= r < r_{k+1}`; `None` below the first node. `r = 1` maps to the last cell.
    pub fn cell_of(&self, r: f64) -> Option<usize> {
        if r < self.nodes[0] {
            return None;
        }
        let k = self.nodes.partition_point(|&x| x <= r);
        Some(k.saturating_sub(1).min(self.nodes.len() - 2))
    }

    /// First index of the four-node stencil serving cell `k` (`None` = extension cell `[0, r_0]`).
    fn stencil(&self, cell: Option<usize>) -> usize {
        let n = self.nodes.len();
        match cell {
            None => 0,
            Some(k) => k.saturating_sub(1).min(n - 4),
        }
    }

    fn cubic<'a>(&'a self, values: &'a [f64], cell: Option<usize>) -> impl Fn(f64) -> f64 + 'a {
        let s = self.stencil(cell);
        let x = &self.nodes[s..s + 4];
        let y = &values[s..s + 4];
        move |r: f64| lagrange4(x, y, r)
    }

    /// Cubic interpolation of nodal `values` at `r` (extrapolates below the first node).
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        self.cubic(values, self.cell_of(r))(r)
    }

    /// Nodal derivative of the cubic stencil interpolant.
    pub fn differentiate(&self, values: &[f64]) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|i| {
                let cell = Some(i.min(self.nodes.len() - 2));
                let s = self.stencil(cell);
                lagrange4_derivative(&self.nodes[s..s + 4], &values[s..s + 4], self.nodes[i])
            })
            .collect()
    }
}

fn graded_z(r: f64) -> f64 {
    r + GRADED_SCALE * r.ln()
}

fn graded_nodes(n: usize, r_min: f64) -> Vec<f64> {
    let z0 = graded_z(r_min);
    let z1 = graded_z(1.0);
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let z = z0 + (z1 - z0) * i as f64 / (n - 1) as f64;
            invert_graded(z)
        })
        .collect();
    v[0] = r_min;
    v[n - 1] = 1.0;
    v
}

/// Solves `e^s + c·s = z` for `s = ln r` (monotone, bisection then Newton).
fn invert_graded(z: f64) -> f64 {
    let g = |s: f64| s.exp() + GRADED_SCALE * s - z;
    let (mut lo, mut hi) = (-60.0f64, 1.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..3 {
        s -= g(s) / (s.exp() + GRADED_SCALE);
    }
    s.exp()
}

fn lagrange4(x: &[f64], y: &[f64], r: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let mut l = 1.0;
        for j in 0..4 {
            if i != j {
                l *= (r - x[j]) / (x[i] - x[j]);
            }
        }
        acc += y[i] * l;
    }
    acc
}

fn lagrange4_derivative(x: &[f64], y: &[f64], r: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let mut denom = 1.0;
        for j in 0..4 {
            if i != j {
                denom *= x[i] - x[j];
            }
        }
        let mut num = 0.0;
        for k in 0..4 {
            if k == i {
                continue;
            }
            let mut prod = 1.0;
            for j in 0..4 {
                if j != i && j != k {
                    prod *= r - x[j];
                }
            }
            num += prod;
        }
        acc += y[i] * num / denom;
    }
    acc
}

/// `∫_l^u p(r) r^w dr` over a segment lying inside one cell (or the origin segment).
///
/// `p` is integrated exactly when it is a polynomial of degree <= 3 and the
/// segment touches the origin; elsewhere the 12-point rule is exact up to
/// rounding for polynomial `p` times the analytic weight.
pub(crate) fn segment_integral(l: f64, u: f64, w: f64, p: impl Fn(f64) -> f64) -> Result<f64> {
    let h = u - l;
    if h <= 0.0 {
        return Ok(0.0);
    }
    if l >= 0.5 * h {
        let rule = gauss_unit();
        let mut acc = 0.0;
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            let r = l + h * x;
            acc += wt * p(r) * r.powf(w);
        }
        return Ok(acc * h);
    }
    // Near the origin: cubic fit in y = r/u at Chebyshev points, exact moments.
    let ys: [f64; 4] = std::array::from_fn(|j| 0.5 * (1.0 - ((2 * j + 1) as f64 * std::f64::consts::PI / 8.0).cos()));
    let vals: [f64; 4] = std::array::from_fn(|j| p(u * ys[j]));
    let c = vandermonde4(&ys, &vals);
    let ratio = l / u;
    let mut acc = 0.0;
    for (j, cj) in c.iter().enumerate() {
        let e = j as f64 + w + 1.0;
        let m = if l == 0.0 {
            if e <= 0.0 {
                return Err(Error::Singularity { exponent: w });
            }
            1.0 / e
        } else if e == 0.0 {
            -ratio.ln()
        } else {
            (1.0 - ratio.powf(e)) / e
        };
        acc += cj * m;
    }
    Ok(acc * u.powf(w + 1.0))
}

/// Monomial coefficients of the cubic through `(x_j, y_j)`.
fn vandermonde4(x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
    let mut a = [[0.0; 5]; 4];
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] = x[i].powi(j as i32);
        }
        a[i][4] = y[i];
    }
    for col in 0..4 {
        let piv = (col..4).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, piv);
        for row in 0..4 {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..5 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    std::array::from_fn(|i| a[i][4] / a[i][i])
}

fn check_bounds(grid: &RadialGrid, w: f64, lower: f64, upper: f64) -> Result<()> {
    if !(lower < upper) || lower < 0.0 || upper > 1.0 {
        return Err(Error::Parameter(format!(
            "integration bounds must satisfy 0 <= lower < upper <= 1, got [{lower}, {upper}]"
        )));
    }
    if lower == 0.0 && w <= -1.0 {
        return Err(Error::Singularity { exponent: w });
    }
    let _ = grid;
    Ok(())
}

/// Segments `(cell, l, u)` covering `[lower, upper]`; `cell = None` is the origin segment.
fn segments(grid: &RadialGrid, lower: f64, upper: f64) -> Vec<(Option<usize>, f64, f64)> {
    let nodes = grid.nodes();
    let mut out = Vec::new();
    if lower < nodes[0] {
        out.push((None, lower, upper.min(nodes[0])));
    }
    if upper > nodes[0] {
        let first = grid.cell_of(lower.max(nodes[0])).unwrap();
        for k in first..nodes.len() - 1 {
            let l = nodes[k].max(lower);
            let u = nodes[k + 1].min(upper);
            if u > l {
                out.push((Some(k), l, u));
            }
            if nodes[k + 1] >= upper {
                break;
            }
        }
    }
    out
}

/// `∫_lower^upper g(r) r^w dr` for `g` sampled at the grid nodes.
pub fn integrate(values: &[f64], grid: &RadialGrid, weight_exponent: f64, lower: f64, upper: f64) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::Parameter(format!("expected {} samples, got {}", grid.len(), values.len())));
    }
    check_bounds(grid, weight_exponent, lower, upper)?;
    let mut acc = 0.0;
    for (cell, l, u) in segments(grid, lower, upper) {
        acc += segment_integral(l, u, weight_exponent, grid.cubic(values, cell))?;
    }
    Ok(acc)
}

/// `∫_lower^upper g(r) r^w dr` for a function evaluated inside each cell.
pub fn integrate_fn(
    g: impl Fn(f64) -> f64,
    grid: &RadialGrid,
    weight_exponent: f64,
    lower: f64,
    upper: f64,
) -> Result<f64> {
    check_bounds(grid, weight_exponent, lower, upper)?;
    let mut acc = 0.0;
    for (_, l, u) in segments(grid, lower, upper) {
        acc += segment_integral(l, u, weight_exponent, &g)?;
    }
    Ok(acc)
}

/// Per-cell integrals `∫_{r_k}^{r_{k+1}} g r^w dr` of nodal samples, `k = 0..n-2`.
pub fn cell_integrals(values: &[f64], grid: &RadialGrid, weight_exponent: f64) -> Result<Vec<f64>> {
    let nodes = grid.nodes();
    (0..nodes.len() - 1)
        .map(|k| segment_integral(nodes[k], nodes[k + 1], weight_exponent, grid.cubic(values, Some(k))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn geometric_ratio_two() {
        let g = make_grid(GridKind::Geometric, 9 + 7, 2f64.powi(-15), None).unwrap();
        for w in g.nodes().windows(2) {
            assert!((w[1] / w[0] - 2.0).abs() < 1e-12);
        }
        assert_eq!(*g.nodes().last().unwrap(), 1.0);
    }

    #[test]
    fn uniform_nodes() {
        let g = make_grid(GridKind::Uniform, 16, 0.0, None).unwrap();
        for (i, r) in g.nodes().iter().enumerate() {
            assert_eq!(*r, (i + 1) as f64 / 16.0);
        }
    }

    #[test]
    fn graded_places_anchor() {
        let g = make_grid(GridKind::Graded, 64, 1e-6, Some(0.05)).unwrap();
        assert!(g.nodes().contains(&0.05));
        assert_eq!(g.anchor(), Some(0.05));
        assert!(g.index_of(0.05).is_some());
        let r = g.refined().unwrap();
        assert!(r.nodes().contains(&0.05));
        assert_eq!(r.len(), 127);
    }

    #[test]
    fn rejects_invalid() {
        assert!(make_grid(GridKind::Graded, 8, 1e-6, None).is_err());
        assert!(make_grid(GridKind::Graded, 64, 0.0, None).is_err());
        assert!(make_grid(GridKind::Graded, 64, 1e-3, Some(1e-4)).is_err());
        assert!(make_grid(GridKind::Geometric, 64, 1.5, None).is_err());
        assert!(RadialGrid::from_nodes(vec![0.5, 0.4, 1.0], None).is_err());
    }

    #[test]
    fn simple_integrals() {
        let g = make_grid(GridKind::Uniform, 16, 0.0, None).unwrap();
        let ones = vec![1.0; g.len()];
        let v = integrate(&ones, &g, 2.0, 0.0, 1.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
        let lin: Vec<f64> = g.nodes().to_vec();
        let v = integrate(&lin, &g, 2.0, 0.0, 1.0).unwrap();
        assert!((v - 0.25).abs() < 1e-14);
        let fine = RadialGrid::default_graded(None).unwrap();
        let s: Vec<f64> = fine.nodes().iter().map(|r| (PI * r).sin()).collect();
        let v = integrate(&s, &fine, 0.0, 0.0, 1.0).unwrap();
        assert!((v - 2.0 / PI).abs() < 1e-10, "{v}");
    }

    #[test]
    fn singular_weight_rejected() {
        let g = RadialGrid::default_graded(None).unwrap();
        let ones = vec![1.0; g.len()];
        assert!(matches!(integrate(&ones, &g, -1.0, 0.0, 1.0), Err(Error::Singularity { .. })));
        // away from the origin any exponent is fine
        let v = integrate(&ones, &g, -1.0, 0.5, 1.0).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn partial_cells_and_fn_integration() {
        let g = make_grid(GridKind::Geometric, 40, 1e-4, None).unwrap();
        let cube: Vec<f64> = g.nodes().iter().map(|r| r * r * r).collect();
        let exact = (0.7f64.powf(4.5) - 0.013f64.powf(4.5)) / 4.5;
        let v = integrate(&cube, &g, 0.5, 0.013, 0.7).unwrap();
        assert!((v - exact).abs() < 1e-14);
        let v = integrate_fn(|r| r * r * r, &g, 0.5, 0.013, 0.7).unwrap();
        assert!((v - exact).abs() < 1e-14);
    }

    #[test]
    fn derivative_of_cubic_is_exact() {
        let g = RadialGrid::default_graded(Some(0.3)).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|r| r * r * r - r).collect();
        let d = g.differentiate(&v);
        for (r, dv) in g.nodes().iter().zip(d) {
            assert!((dv - (3.0 * r * r - 1.0)).abs() < 1e-9);
        }
    }
}
