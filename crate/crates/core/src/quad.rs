//! Fixed Gauss–Legendre rule on `[0, 1]`.

use std::sync::OnceLock;

pub(crate) const GAUSS_POINTS: usize = 12;

pub(crate) struct Rule {
    pub nodes: [f64; GAUSS_POINTS],
    pub weights: [f64; GAUSS_POINTS],
}

pub(crate) fn gauss_unit() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| build(GAUSS_POINTS))
}

fn build(n: usize) -> Rule {
    let mut nodes = [0.0; GAUSS_POINTS];
    let mut weights = [0.0; GAUSS_POINTS];
    for i in 0..n {
        // Newton on P_n starting from the Chebyshev-like guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 0.5 * w;
    }
    Rule { nodes, weights }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_high_degree_monomials() {
        let rule = gauss_unit();
        for k in 0..(2 * GAUSS_POINTS) {
            let s: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
            assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-15, "degree {k}: {s}");
        }
    }
}
