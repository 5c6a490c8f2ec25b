//! CSV tables, verification checks and the JSON run summary.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

/// Locale-independent scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One asserted inequality or identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The statement being verified, in words.
    pub inequality: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, inequality: impl Into<String>, passed: bool, value: f64, limit: f64) -> Self {
        Self { name: name.into(), inequality: inequality.into(), passed, value, limit }
    }

    pub fn at_most(name: impl Into<String>, inequality: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, inequality, value <= limit, value, limit)
    }

    pub fn at_least(name: impl Into<String>, inequality: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, inequality, value >= limit, value, limit)
    }

    pub fn equal(name: impl Into<String>, inequality: impl Into<String>, value: f64, expected: f64) -> Self {
        Self::new(name, inequality, value == expected, value, expected)
    }
}

/// Everything an experiment produces before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Option<Table>,
    pub results: Value,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    generated_at_unix: u64,
    config: &'a crate::RunConfig,
    passed: bool,
    failed_checks: Vec<&'a str>,
    checks: &'a [Check],
    results: &'a Value,
    csv: Option<String>,
}

/// Writes `<dir>/<experiment>.csv` (if any) and `<dir>/<experiment>.json`; returns the summary text.
pub fn persist(
    dir: &Path,
    experiment: &str,
    config: &crate::RunConfig,
    outcome: &Outcome,
) -> anyhow::Result<(PathBuf, String)> {
    std::fs::create_dir_all(dir)?;
    let csv = match &outcome.table {
        Some(t) => {
            let path = dir.join(format!("{experiment}.csv"));
            t.write(&path)?;
            Some(path.display().to_string())
        }
        None => None,
    };
    let summary = Summary {
        experiment,
        generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        config,
        passed: outcome.passed(),
        failed_checks: outcome.checks.iter().filter(|c| !c.passed).map(|c| c.inequality.as_str()).collect(),
        checks: &outcome.checks,
        results: &outcome.results,
        csv,
    };
    let text = serde_json::to_string_pretty(&summary)?;
    let path = dir.join(format!("{experiment}.json"));
    std::fs::write(&path, format!("{text}\n"))?;
    Ok((path, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn checks_compare() {
        assert!(Check::at_most("a", "x <= 1", 1.0, 1.0).passed);
        assert!(!Check::at_least("b", "x >= 1", 0.5, 1.0).passed);
        assert!(!Check::at_least("nan", "x >= 1", f64::NAN, 1.0).passed);
    }
}
