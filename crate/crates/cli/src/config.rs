//! Run configuration: JSON file values with command-line flags layered on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Every setting any experiment understands. Unset fields fall back to per-experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<String>,
    pub dim: Option<Vec<u32>>,
    pub alpha: Option<Vec<f64>>,
    pub r0: Option<Vec<f64>>,
    pub q: Option<f64>,
    pub potential: Option<String>,
    pub l_max: Option<u32>,
    pub expect_radial: Option<usize>,
    pub expect_full: Option<u64>,
    pub family: Option<String>,
    pub m_min: Option<f64>,
    pub m_decades: Option<f64>,
    pub m_per_decade: Option<usize>,
    pub rho: Option<f64>,
    pub weight: Option<String>,
    pub lambda: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub nodes: Option<usize>,
    pub r_min: Option<f64>,
    pub report: Option<PathBuf>,
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($field:ident),*) => {
        RunConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        overlay!(
            self,
            base,
            experiment,
            dim,
            alpha,
            r0,
            q,
            potential,
            l_max,
            expect_radial,
            expect_full,
            family,
            m_min,
            m_decades,
            m_per_decade,
            rho,
            weight,
            lambda,
            mu,
            tol,
            max_iter,
            nodes,
            r_min,
            report,
            threads
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let flags = RunConfig { dim: Some(vec![5]), ..Default::default() };
        let file = RunConfig { dim: Some(vec![3]), r0: Some(vec![0.1]), ..Default::default() };
        let merged = flags.over(file);
        assert_eq!(merged.dim, Some(vec![5]));
        assert_eq!(merged.r0, Some(vec![0.1]));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"dims": [3]}"#).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"dim": [3], "r0": [0.05]}"#).unwrap();
        assert_eq!(c.r0, Some(vec![0.05]));
    }
}
