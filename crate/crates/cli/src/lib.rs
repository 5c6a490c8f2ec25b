//! Command-line driver for the ellstab experiments.
//!
//! `run_command` parses arguments, merges an optional JSON config under the flags, runs the
//! experiment on a bounded thread pool and writes `<report>/<experiment>.csv` and `.json`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod config;
pub mod experiments;
pub mod report;

pub use config::RunConfig;
pub use report::{Check, Outcome, Table};

pub const DEFAULT_REPORT_DIR: &str = "ellstab-out";
pub const THREADS_ENV: &str = "ELLSTAB_THREADS";

/// Why a run did not produce a verdict.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration; exit status 2.
    Usage(String),
    /// Numerical or I/O failure; exit status 1.
    Runtime(anyhow::Error),
}

impl From<ellstab_core::Error> for Failure {
    fn from(e: ellstab_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "ellstab", version, about = "Stability experiments for radial semilinear elliptic problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Radial Morse indices and norm quotients of the unstable counterexample.
    Counterexample {
        #[command(flatten)]
        common: Common,
        /// Inner radii (comma separated or repeated).
        #[arg(long, value_delimiter = ',')]
        r0: Vec<f64>,
        /// Exponent of the norm in the quotient sup|u| / ||u||_q.
        #[arg(long)]
        q: Option<f64>,
    },
    /// Radial and full Morse index of -Δ - V on the unit ball.
    Morse {
        #[command(flatten)]
        common: Common,
        /// zero | const:V | power:C:E (V(r) = C r^E).
        #[arg(long)]
        potential: Option<String>,
        #[arg(long)]
        l_max: Option<u32>,
        /// Fail unless the radial index equals this value.
        #[arg(long)]
        expect_radial: Option<usize>,
        /// Fail unless the full index equals this value.
        #[arg(long)]
        expect_full: Option<u64>,
    },
    /// Pointwise, band and key-integral estimates for stable Hardy-Hénon solutions.
    HhVerify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Vec<f64>,
    },
    /// Trace λ(m) along the Gelfand branch by shooting.
    Gelfand {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Vec<f64>,
        /// exp | const | power-qn | power:P
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        m_min: Option<f64>,
        #[arg(long)]
        m_decades: Option<f64>,
        #[arg(long)]
        m_per_decade: Option<usize>,
    },
    /// Penalized eigenvalues and the signed solution pair of the degenerate problem.
    Degenerate {
        #[command(flatten)]
        common: Common,
        /// Radius of the inner ball where the weight vanishes.
        #[arg(long)]
        rho: Option<f64>,
        /// indicator | ramp
        #[arg(long)]
        weight: Option<String>,
        /// Slopes λ of g(u) = λu to solve for.
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        /// Penalty values for the λ1(μ) curve.
        #[arg(long, value_delimiter = ',')]
        mu: Vec<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// JSON file with RunConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dimensions (comma separated or repeated).
    #[arg(long, value_delimiter = ',')]
    dim: Vec<u32>,
    /// Grid node count.
    #[arg(long)]
    nodes: Option<usize>,
    /// Innermost grid radius.
    #[arg(long)]
    r_min: Option<f64>,
    /// Output directory.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads (capped by ELLSTAB_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

fn list<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

impl Common {
    fn flags(self, experiment: &str) -> (Option<PathBuf>, RunConfig) {
        let cfg = RunConfig {
            experiment: Some(experiment.into()),
            dim: list(self.dim),
            nodes: self.nodes,
            r_min: self.r_min,
            report: self.report,
            threads: self.threads,
            ..Default::default()
        };
        (self.config, cfg)
    }
}

impl Command {
    fn split(self) -> (Option<PathBuf>, RunConfig) {
        match self {
            Command::Counterexample { common, r0, q } => {
                let (path, cfg) = common.flags("counterexample");
                (path, RunConfig { r0: list(r0), q, ..cfg })
            }
            Command::Morse { common, potential, l_max, expect_radial, expect_full } => {
                let (path, cfg) = common.flags("morse");
                (path, RunConfig { potential, l_max, expect_radial, expect_full, ..cfg })
            }
            Command::HhVerify { common, alpha } => {
                let (path, cfg) = common.flags("hh-verify");
                (path, RunConfig { alpha: list(alpha), ..cfg })
            }
            Command::Gelfand { common, alpha, family, m_min, m_decades, m_per_decade } => {
                let (path, cfg) = common.flags("gelfand");
                (path, RunConfig { alpha: list(alpha), family, m_min, m_decades, m_per_decade, ..cfg })
            }
            Command::Degenerate { common, rho, weight, lambda, mu, tol, max_iter } => {
                let (path, cfg) = common.flags("degenerate");
                (path, RunConfig { rho, weight, lambda: list(lambda), mu: list(mu), tol, max_iter, ..cfg })
            }
        }
    }
}

/// Parses `argv` (without the program name) into the merged configuration.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = std::iter::once(OsString::from("ellstab")).chain(argv.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(args)?;
    let (path, flags) = cli.command.split();
    let Some(path) = path else { return Ok(flags) };
    let base =
        RunConfig::load(&path).map_err(|e| clap::Error::raw(clap::error::ErrorKind::ValueValidation, e + "\n"))?;
    if let (Some(a), Some(b)) = (&base.experiment, &flags.experiment) {
        if a != b {
            let msg = format!("config {} is for experiment {a:?}, not {b:?}\n", path.display());
            return Err(clap::Error::raw(clap::error::ErrorKind::ValueValidation, msg));
        }
    }
    Ok(flags.over(base))
}

/// Worker count: the requested value (or all cores) capped by `ELLSTAB_THREADS`.
pub fn thread_count(requested: Option<usize>) -> usize {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    let want =
        requested.filter(|&n| n > 0).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cap.map_or(want, |c| want.min(c))
}

/// Runs the experiment named in `cfg` without writing anything.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cfg.threads))
        .build()
        .map_err(|e| Failure::Runtime(e.into()))?;
    pool.install(|| match cfg.experiment.as_deref() {
        Some("counterexample") => experiments::counterexample(cfg),
        Some("morse") => experiments::morse(cfg),
        Some("hh-verify") => experiments::hh_verify(cfg),
        Some("gelfand") => experiments::gelfand(cfg),
        Some("degenerate") => experiments::degenerate(cfg),
        other => Err(Failure::Usage(format!("unknown experiment {other:?}"))),
    })
}

/// Full command: parse, run, persist. Returns the process exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_config(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return 2;
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };
    let dir = cfg.report.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_REPORT_DIR));
    let experiment = cfg.experiment.as_deref().unwrap_or_default();
    match report::persist(&dir, experiment, &cfg, &outcome) {
        Ok((_, text)) => println!("{text}"),
        Err(e) => {
            eprintln!("error: cannot write report to {}: {e:#}", dir.display());
            return 1;
        }
    }
    for c in outcome.checks.iter().filter(|c| !c.passed) {
        eprintln!("FAILED {}: {} (value {}, limit {})", c.name, c.inequality, c.value, c.limit);
    }
    i32::from(!outcome.passed())
}
