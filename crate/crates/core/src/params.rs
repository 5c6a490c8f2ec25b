use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Dimension `N` and Hénon exponent `α` of `-Δu = |x|^α f(u)` in `B_1 ⊂ R^N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    dim: u32,
    alpha: f64,
}

impl ProblemParams {
    pub fn new(dim: u32, alpha: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Parameter(format!("dimension must be >= 2, got {dim}")));
        }
        if !alpha.is_finite() || alpha <= -2.0 {
            return Err(Error::Parameter(format!("alpha must be finite and > -2, got {alpha}")));
        }
        Ok(Self { dim, alpha })
    }

    /// Autonomous problem (`α = 0`).
    pub fn autonomous(dim: u32) -> Result<Self> {
        Self::new(dim, 0.0)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exponent of the radial volume element `r^{N-1}`.
    pub fn volume_exponent(&self) -> f64 {
        self.n() - 1.0
    }

    /// Threshold dimension `10 + 4α` separating bounded from unbounded stable solutions.
    pub fn critical_dim(&self) -> f64 {
        10.0 + 4.0 * self.alpha
    }

    /// Surface area `ω_N` of the unit sphere `S^{N-1}`.
    pub fn sphere_area(&self) -> f64 {
        sphere_area(self.dim)
    }

    /// Volume `|B_1| = ω_N / N`.
    pub fn ball_volume(&self) -> f64 {
        self.sphere_area() / self.n()
    }
}

/// `2 π^{N/2} / Γ(N/2)` evaluated by the two-step recurrence `ω_{N+2} = 2π ω_N / N`.
pub fn sphere_area(dim: u32) -> f64 {
    let (mut area, mut n) = if dim % 2 == 0 { (2.0 * PI, 2u32) } else { (2.0, 1u32) };
    while n < dim {
        area *= 2.0 * PI / n as f64;
        n += 2;
    }
    area
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ProblemParams::new(1, 0.0).is_err());
        assert!(ProblemParams::new(3, -2.0).is_err());
        assert!(ProblemParams::new(3, f64::NAN).is_err());
        let p = ProblemParams::new(10, 0.0).unwrap();
        assert_eq!(p.critical_dim(), 10.0);
    }
}
