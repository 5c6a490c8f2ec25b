//! Explicit Runge–Kutta integration of two-component systems `y' = F(r, y)`.
//!
//! Dormand–Prince 5(4) with standard step-size control, plus classical fixed-step
//! RK4 for convergence-order studies.

use crate::error::{Error, Result};

pub type State = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Adaptive {
        rtol: f64,
        atol: f64,
    },
    /// Classical RK4 with (at most) the given step.
    FixedRk4 {
        step: f64,
    },
}

impl Default for Method {
    fn default() -> Self {
        Self::Adaptive { rtol: 1e-11, atol: 1e-13 }
    }
}

/// Largest number of steps before giving up.
pub const MAX_STEPS: usize = 2_000_000;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

fn add(y: &State, h: f64, k: &[State], coeffs: &[f64]) -> State {
    let mut out = *y;
    for (kj, &c) in k.iter().zip(coeffs) {
        if c != 0.0 {
            out[0] += h * c * kj[0];
            out[1] += h * c * kj[1];
        }
    }
    out
}

/// One Dormand–Prince step: 5th-order solution and embedded error estimate.
pub fn dopri_step<F>(f: &F, r: f64, y: &State, h: f64) -> Result<(State, State)>
where
    F: Fn(f64, &State) -> Result<State>,
{
    let mut k = [[0.0; 2]; 7];
    for s in 0..7 {
        let ys = add(y, h, &k[..s], &A[s][..s]);
        k[s] = f(r + C[s] * h, &ys)?;
    }
    let y5 = add(y, h, &k, &B5);
    let y4 = add(y, h, &k, &B4);
    Ok((y5, [y5[0] - y4[0], y5[1] - y4[1]]))
}

pub fn rk4_step<F>(f: &F, r: f64, y: &State, h: f64) -> Result<State>
where
    F: Fn(f64, &State) -> Result<State>,
{
    let k1 = f(r, y)?;
    let k2 = f(r + 0.5 * h, &add(y, h, &[k1], &[0.5]))?;
    let k3 = f(r + 0.5 * h, &add(y, h, &[k2], &[0.5]))?;
    let k4 = f(r + h, &add(y, h, &[k3], &[1.0]))?;
    Ok(add(y, h, &[k1, k2, k3, k4], &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]))
}

fn error_norm(err: &State, y0: &State, y1: &State, rtol: f64, atol: f64) -> f64 {
    let mut acc: f64 = 0.0;
    for i in 0..2 {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        acc = acc.max((err[i] / sc).abs());
    }
    acc
}

/// Single step of the method (no acceptance test) used for event location.
fn plain_step<F>(f: &F, method: Method, r: f64, y: &State, h: f64) -> Result<State>
where
    F: Fn(f64, &State) -> Result<State>,
{
    match method {
        Method::Adaptive { .. } => Ok(dopri_step(f, r, y, h)?.0),
        Method::FixedRk4 { .. } => rk4_step(f, r, y, h),
    }
}

/// Stepper that advances `(r, y)` toward `target` with one accepted step.
struct Stepper {
    method: Method,
    h: f64,
    steps: usize,
}

impl Stepper {
    fn new(method: Method, r0: f64, span: f64) -> Self {
        let h = match method {
            Method::Adaptive { .. } => (1e-3 * r0).max(1e-12 * span.abs()),
            Method::FixedRk4 { step } => step,
        };
        Self { method, h, steps: 0 }
    }

    fn advance<F>(&mut self, f: &F, r: f64, y: &State, target: f64) -> Result<(f64, State)>
    where
        F: Fn(f64, &State) -> Result<State>,
    {
        loop {
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(Error::Shooting(format!("step budget exhausted near r = {r}")));
            }
            let h = self.h.min(target - r);
            match self.method {
                Method::FixedRk4 { .. } => {
                    let y1 = rk4_step(f, r, y, h)?;
                    return Ok((r + h, y1));
                }
                Method::Adaptive { rtol, atol } => {
                    let (y1, err) = dopri_step(f, r, y, h)?;
                    let e = error_norm(&err, y, &y1, rtol, atol);
                    let finite = y1.iter().all(|v| v.is_finite()) && e.is_finite();
                    let factor = if finite { (0.9 * e.max(1e-10).powf(-0.2)).clamp(0.2, 5.0) } else { 0.2 };
                    if finite && e <= 1.0 {
                        if h == self.h {
                            self.h *= factor;
                        } else {
                            self.h = self.h.max(h * factor);
                        }
                        return Ok((r + h, y1));
                    }
                    self.h = h * factor;
                    if self.h <= 1e-15 * r.abs().max(1e-300) {
                        return Err(Error::Shooting(format!("step size underflow near r = {r}")));
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// First `r` with `y[0](r) = 0`.
    pub r: f64,
    pub y: State,
    pub steps: usize,
}

/// Integrates from `(r0, y0)` until the first component reaches zero (before `r_max`).
pub fn integrate_to_zero<F>(f: &F, r0: f64, y0: State, r_max: f64, method: Method) -> Result<Crossing>
where
    F: Fn(f64, &State) -> Result<State>,
{
    if !(y0[0] > 0.0) {
        return Err(Error::Parameter("initial value must be positive".into()));
    }
    let mut st = Stepper::new(method, r0, r_max - r0);
    let (mut r, mut y) = (r0, y0);
    while r < r_max {
        let (r1, y1) = st.advance(f, r, &y, r_max)?;
        if y1[0] <= 0.0 {
            let (rz, yz) = locate_zero(f, method, r, &y, r1 - r, &y1)?;
            return Ok(Crossing { r: rz, y: yz, steps: st.steps });
        }
        r = r1;
        y = y1;
    }
    Err(Error::Shooting(format!("no zero before r = {r_max}")))
}

/// Newton on the step length `s` so that one step from `(r, y)` lands on `y[0] = 0`.
fn locate_zero<F>(f: &F, method: Method, r: f64, y: &State, h: f64, y_end: &State) -> Result<(f64, State)>
where
    F: Fn(f64, &State) -> Result<State>,
{
    // secant start from the bracketing values
    let mut s = h * y[0] / (y[0] - y_end[0]);
    let mut ys = plain_step(f, method, r, y, s)?;
    for _ in 0..50 {
        let slope = ys[1];
        if slope == 0.0 {
            break;
        }
        let ds = -ys[0] / slope;
        s = (s + ds).clamp(0.0, h);
        ys = plain_step(f, method, r, y, s)?;
        if ds.abs() <= 1e-15 * (r + s) {
            break;
        }
    }
    Ok((r + s, ys))
}

/// States at each of the increasing `outputs` (all `>= r0`), landing on them exactly.
pub fn integrate_to_points<F>(f: &F, r0: f64, y0: State, outputs: &[f64], method: Method) -> Result<Vec<State>>
where
    F: Fn(f64, &State) -> Result<State>,
{
    let span = outputs.last().copied().unwrap_or(r0) - r0;
    let mut st = Stepper::new(method, r0, span);
    let (mut r, mut y) = (r0, y0);
    let mut out = Vec::with_capacity(outputs.len());
    for &target in outputs {
        if target < r {
            return Err(Error::Parameter("output radii must be increasing and >= r0".into()));
        }
        while r < target {
            let (r1, y1) = st.advance(f, r, &y, target)?;
            r = if (target - r1).abs() <= 1e-15 * target { target } else { r1 };
            y = y1;
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    // y'' = -y, y(0) = 1, y'(0) = 0: first zero at π/2.
    fn oscillator(_: f64, y: &State) -> Result<State> {
        Ok([y[1], -y[0]])
    }

    #[test]
    fn adaptive_zero_of_cosine() {
        let c = integrate_to_zero(&oscillator, 0.0, [1.0, 0.0], 10.0, Method::default()).unwrap();
        assert!((c.r - std::f64::consts::FRAC_PI_2).abs() < 1e-11, "{}", c.r);
        assert!((c.y[1] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let mut errs = vec![];
        for step in [0.1, 0.05, 0.025] {
            let c = integrate_to_zero(&oscillator, 0.0, [1.0, 0.0], 10.0, Method::FixedRk4 { step }).unwrap();
            errs.push((c.r - std::f64::consts::FRAC_PI_2).abs());
        }
        assert!(errs[0] / errs[1] > 8.0 && errs[1] / errs[2] > 8.0, "{errs:?}");
    }

    #[test]
    fn outputs_land_on_points() {
        let pts = [0.5, 1.0, 2.0, 3.0];
        let ys = integrate_to_points(&oscillator, 0.0, [1.0, 0.0], &pts, Method::default()).unwrap();
        for (t, y) in pts.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn no_zero_is_reported() {
        let grow = |_: f64, y: &State| Ok([y[0], 0.0]);
        assert!(matches!(integrate_to_zero(&grow, 0.0, [1.0, 0.0], 2.0, Method::default()), Err(Error::Shooting(_))));
    }
}
