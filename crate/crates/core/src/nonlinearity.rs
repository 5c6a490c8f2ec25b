//! Nonlinearities `f` with derivative `f'` and antiderivative `F(u) = ∫_0^u f`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    /// `a·e^{b u}`.
    Exponential {
        coeff: f64,
        rate: f64,
    },
    /// `c·|u+s|^{p-1}(u+s)`, the odd extension of `c(u+s)^p` below `u = -s`.
    Power {
        coeff: f64,
        exponent: f64,
        shift: f64,
    },
    Constant {
        value: f64,
    },
    Tabulated(Table),
}

/// Samples `(u_i, f_i, f'_i)` with `u_i` strictly increasing; linear interpolation in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    u: Vec<f64>,
    f: Vec<f64>,
    fprime: Vec<f64>,
    /// `F` at the nodes, trapezoidal from `u = 0`.
    big_f: Vec<f64>,
}

impl Table {
    /// Rows may come in any order; they are sorted by `u`. `0` must lie in the table range.
    pub fn new(mut rows: Vec<(f64, f64, f64)>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Parameter("table needs at least two rows".into()));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if rows.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Parameter("tabulated u values must be strictly monotone".into()));
        }
        let u: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let f: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let fprime: Vec<f64> = rows.iter().map(|r| r.2).collect();
        if !(u[0] <= 0.0 && *u.last().unwrap() >= 0.0) {
            return Err(Error::Parameter("table range must contain u = 0".into()));
        }
        let mut cum = vec![0.0; u.len()];
        for i in 1..u.len() {
            cum[i] = cum[i - 1] + 0.5 * (f[i] + f[i - 1]) * (u[i] - u[i - 1]);
        }
        let mut t = Self { u, f, fprime, big_f: cum };
        let shift = t.antiderivative_raw(0.0);
        for v in &mut t.big_f {
            *v -= shift;
        }
        Ok(t)
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn fprime(&self) -> &[f64] {
        &self.fprime
    }

    pub fn range(&self) -> (f64, f64) {
        (self.u[0], *self.u.last().unwrap())
    }

    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.range();
        let slack = 1e-12 * lo.abs().max(hi.abs()).max(1e-300);
        if x < lo - slack || x > hi + slack || x.is_nan() {
            return Err(Error::Extrapolation { value: x, lo, hi });
        }
        let x = x.clamp(lo, hi);
        let k = self.u.partition_point(|&v| v <= x).clamp(1, self.u.len() - 1) - 1;
        let t = (x - self.u[k]) / (self.u[k + 1] - self.u[k]);
        Ok((k, t))
    }

    fn lerp(col: &[f64], k: usize, t: f64) -> f64 {
        if t == 0.0 {
            col[k]
        } else if t == 1.0 {
            col[k + 1]
        } else {
            col[k] + t * (col[k + 1] - col[k])
        }
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        let (k, t) = self.locate(x)?;
        Ok(Self::lerp(&self.f, k, t))
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        let (k, t) = self.locate(x)?;
        Ok(Self::lerp(&self.fprime, k, t))
    }

    fn antiderivative_raw(&self, x: f64) -> f64 {
        let (k, t) = self.locate(x).expect("inside range");
        let h = self.u[k + 1] - self.u[k];
        let fx = Self::lerp(&self.f, k, t);
        self.big_f[k] + 0.5 * (self.f[k] + fx) * t * h
    }

    pub fn antiderivative(&self, x: f64) -> Result<f64> {
        self.locate(x)?;
        Ok(self.antiderivative_raw(x))
    }

    fn scaled(&self, s: f64) -> Self {
        let mul = |v: &[f64]| v.iter().map(|x| s * x).collect();
        Self { u: self.u.clone(), f: mul(&self.f), fprime: mul(&self.fprime), big_f: mul(&self.big_f) }
    }
}

impl Nonlinearity {
    /// `s·f`.
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Self::Exponential { coeff, rate } => Self::Exponential { coeff: s * coeff, rate: *rate },
            Self::Power { coeff, exponent, shift } => {
                Self::Power { coeff: s * coeff, exponent: *exponent, shift: *shift }
            }
            Self::Constant { value } => Self::Constant { value: s * value },
            Self::Tabulated(t) => Self::Tabulated(t.scaled(s)),
        }
    }

    pub fn value(&self, u: f64) -> Result<f64> {
        Ok(match self {
            Self::Exponential { coeff, rate } => coeff * (rate * u).exp(),
            Self::Power { coeff, exponent, shift } => {
                let x = u + shift;
                coeff * x.signum() * x.abs().powf(*exponent)
            }
            Self::Constant { value } => *value,
            Self::Tabulated(t) => return t.value(u),
        })
    }

    pub fn derivative(&self, u: f64) -> Result<f64> {
        Ok(match self {
            Self::Exponential { coeff, rate } => coeff * rate * (rate * u).exp(),
            Self::Power { coeff, exponent, shift } => {
                let x = (u + shift).abs();
                if *exponent == 1.0 {
                    *coeff
                } else {
                    coeff * exponent * x.powf(exponent - 1.0)
                }
            }
            Self::Constant { .. } => 0.0,
            Self::Tabulated(t) => return t.derivative(u),
        })
    }

    /// `F(u) = ∫_0^u f(s) ds`.
    pub fn antiderivative(&self, u: f64) -> Result<f64> {
        Ok(match self {
            Self::Exponential { coeff, rate } => {
                if *rate == 0.0 {
                    coeff * u
                } else {
                    coeff * (rate * u).exp_m1() / rate
                }
            }
            Self::Power { coeff, exponent, shift } => {
                let e = exponent + 1.0;
                let prim = |x: f64| x.abs().powf(e) / e;
                coeff * (prim(u + shift) - prim(*shift))
            }
            Self::Constant { value } => value * u,
            Self::Tabulated(t) => return t.antiderivative(u),
        })
    }

    /// `lim_{|t|→∞} f(t)/t`, when finite.
    pub fn asymptotic_slope(&self) -> Option<f64> {
        match self {
            Self::Power { coeff, exponent, .. } if *exponent == 1.0 => Some(*coeff),
            Self::Power { exponent, .. } if *exponent < 1.0 => Some(0.0),
            Self::Constant { .. } => Some(0.0),
            Self::Exponential { rate, .. } if *rate == 0.0 => Some(0.0),
            _ => None,
        }
    }

    /// Sup of `|f'|` over `[lo, hi]`, sampled densely plus both endpoints.
    pub fn lipschitz_bound(&self, lo: f64, hi: f64) -> Result<f64> {
        let samples = 256;
        let mut best: f64 = 0.0;
        for i in 0..=samples {
            let x = lo + (hi - lo) * i as f64 / samples as f64;
            best = best.max(self.derivative(x)?.abs());
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_antiderivatives_vanish_at_zero() {
        let fs = [
            Nonlinearity::Exponential { coeff: 2.0, rate: 3.0 },
            Nonlinearity::Power { coeff: 1.5, exponent: 6.9, shift: 1.0 },
            Nonlinearity::Power { coeff: 1.0, exponent: 3.0, shift: 0.0 },
            Nonlinearity::Constant { value: 4.0 },
        ];
        for f in &fs {
            assert_eq!(f.antiderivative(0.0).unwrap(), 0.0);
            // F' = f by central differences
            for &u in &[-0.3, 0.2, 0.9] {
                let h = 1e-5;
                let d = (f.antiderivative(u + h).unwrap() - f.antiderivative(u - h).unwrap()) / (2.0 * h);
                assert!((d - f.value(u).unwrap()).abs() < 1e-6 * (1.0 + d.abs()));
                let d2 = (f.value(u + h).unwrap() - f.value(u - h).unwrap()) / (2.0 * h);
                assert!((d2 - f.derivative(u).unwrap()).abs() < 1e-5 * (1.0 + d2.abs()));
            }
        }
    }

    #[test]
    fn scaling_is_linear() {
        let f = Nonlinearity::Exponential { coeff: 2.0, rate: 1.5 };
        let g = f.scaled(3.0);
        for u in [-1.0, 0.0, 0.7] {
            assert!((g.value(u).unwrap() - 3.0 * f.value(u).unwrap()).abs() < 1e-14);
            assert!((g.antiderivative(u).unwrap() - 3.0 * f.antiderivative(u).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn odd_power() {
        let f = Nonlinearity::Power { coeff: 1.0, exponent: 3.0, shift: 0.0 };
        assert_eq!(f.value(-2.0).unwrap(), -8.0);
        assert_eq!(f.derivative(-2.0).unwrap(), 12.0);
    }

    #[test]
    fn table_interpolation_and_extrapolation_error() {
        let rows: Vec<_> = (0..=10)
            .map(|i| {
                let u = i as f64 / 10.0;
                (u, 2.0 * u, 2.0)
            })
            .collect();
        let t = Nonlinearity::Tabulated(Table::new(rows).unwrap());
        assert!((t.value(0.55).unwrap() - 1.1).abs() < 1e-14);
        assert!((t.antiderivative(0.5).unwrap() - 0.25).abs() < 1e-14);
        assert!((t.derivative(0.33).unwrap() - 2.0).abs() < 1e-14);
        assert!(matches!(t.value(1.5), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn table_requires_monotone_u() {
        assert!(Table::new(vec![(0.0, 1.0, 0.0), (0.0, 1.0, 0.0)]).is_err());
        assert!(Table::new(vec![(0.5, 1.0, 0.0), (1.0, 1.0, 0.0)]).is_err());
    }
}
