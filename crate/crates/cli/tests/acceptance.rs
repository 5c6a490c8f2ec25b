//! End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use ellstab_cli::{execute, RunConfig};
use ellstab_core::degenerate::mu_sweep;
use ellstab_core::estimates::{key_inequality, quotient_scaling_fit, ur_band_bound, TestFunction};
use ellstab_core::profiles::{gamma_exponent, ExplicitHh, HHExponents, HhCase};
use ellstab_core::spectral::{
    assemble_with_potential, hardy_check, morse_index, radial_index, smallest_eigenvalues, QuadraticFormSpec,
};
use ellstab_core::{GridKind, ProblemParams, RadialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Verdict = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(cfg: RunConfig) -> Result<ellstab_cli::Outcome, String> {
    execute(&cfg).map_err(|e| format!("{e:?}"))
}

fn params(dim: u32, alpha: f64) -> ProblemParams {
    ProblemParams::new(dim, alpha).unwrap()
}

fn hh(dim: u32, alpha: f64) -> ExplicitHh {
    let p = params(dim, alpha);
    let case = if (p.n() - p.critical_dim()).abs() < 1e-12 {
        HhCase::Critical { scale: 2.0 }
    } else {
        HhCase::Supercritical { gamma: gamma_exponent(&p).unwrap().gamma }
    };
    ExplicitHh::new(p, case).unwrap()
}

fn counterexample_index() -> Verdict {
    let out = run(RunConfig {
        experiment: Some("counterexample".into()),
        dim: Some((3..=9).collect()),
        r0: Some(vec![0.05]),
        nodes: Some(2048),
        ..Default::default()
    })?;
    let rows = &out.table.as_ref().unwrap().rows;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r[6..9] != ["1", "0", "0"])
        .map(|r| format!("N={} indices ({},{},{})", r[0], r[6], r[7], r[8]))
        .collect();
    ensure(
        rows.len() == 7 && bad.is_empty(),
        format!("{} dimensions, (1,0,0) everywhere; mismatches {bad:?}", rows.len()),
    )
}

fn quotient_divergence() -> Verdict {
    let r0s: Vec<f64> = (3..=9).map(|k| 0.5f64.powi(k)).collect();
    let a = quotient_scaling_fit(params(3, 0.0), f64::INFINITY, 1.0, &r0s, 2048).map_err(|e| e.to_string())?;
    let b = quotient_scaling_fit(params(5, 0.0), 4.0, 2.0, &r0s, 2048).map_err(|e| e.to_string())?;
    let (sa, sb) = (a.fitted_slope.unwrap(), b.fitted_slope.unwrap());
    let (oa, ob) = ((sa + 3.0).abs() <= 0.1, (sb + 1.25).abs() <= 0.1);
    ensure(
        oa && ob,
        format!(
            "N=3 sup/L1 slope {sa:.4} (target -3 +- 0.1: {}), N=5 L4/L2 slope {sb:.4} (target -1.25 +- 0.1: {})",
            if oa { "ok" } else { "off" },
            if ob { "ok" } else { "off" }
        ),
    )
}

fn spectral_oracle() -> Verdict {
    let morse = |potential: &str| {
        run(RunConfig {
            experiment: Some("morse".into()),
            dim: Some(vec![3]),
            potential: Some(potential.into()),
            nodes: Some(2048),
            ..Default::default()
        })
    };
    let c = morse("const:50")?.results;
    let z = morse("zero")?.results;
    let (radial, full) = (c["radial_index"].as_u64(), c["full_index"].as_u64());
    let first = z["smallest_eigenvalues"][0].as_f64().unwrap_or(f64::NAN);
    let rel = (first / (PI * PI) - 1.0).abs();
    ensure(
        radial == Some(2) && full == Some(17) && rel <= 0.005,
        format!("radial {radial:?}, full {full:?}, first Dirichlet eigenvalue {first:.6} (rel err {rel:.2e})"),
    )
}

fn hardy_sweep() -> Verdict {
    let grid = RadialGrid::new(GridKind::Graded, 512, 1e-6, None).unwrap();
    let nodes = grid.nodes().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let i = rng.gen_range(0..nodes.len() - 3);
        let j = rng.gen_range(i + 2..nodes.len());
        let alpha = rng.gen_range(-12.0..4.0);
        let omega: Vec<f64> =
            (0..nodes.len()).map(|k| if k > i && k < j { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
        let h = hardy_check(&omega, nodes[i], nodes[j], alpha, &grid).map_err(|e| e.to_string())?;
        let rel = h.margin / (h.lhs + h.rhs);
        worst = worst.min(rel);
        violations += usize::from(h.margin < -1e-10 * (h.lhs + h.rhs));
    }
    ensure(violations == 0, format!("{violations} violations in 1000 trials, smallest relative margin {worst:.3e}"))
}

fn henon_exponents() -> Verdict {
    let mut gamma_worst = 0.0f64;
    let mut off_threshold_min = f64::INFINITY;
    for k in 0..=40 {
        let alpha = -1.5 + 0.125 * k as f64;
        let crit = 10.0 + 4.0 * alpha;
        gamma_worst = gamma_worst.max(HHExponents::for_real_dim(crit, alpha).unwrap().gamma.abs());
        for dn in [-0.5, 0.5, 3.0] {
            if crit + dn >= 2.0 {
                let g = HHExponents::for_real_dim(crit + dn, alpha).unwrap().gamma;
                off_threshold_min = off_threshold_min.min(g.abs());
            }
        }
    }
    let grid = RadialGrid::new(GridKind::Graded, 2048, 1e-6, Some(1e-4)).unwrap();
    let mut margin_worst = 0.0f64;
    for (dim, alpha) in [(10, 0.0), (14, 1.0), (12, 0.5), (18, 2.0)] {
        let s = hh(dim, alpha);
        let u = s.sample(&grid).map_err(|e| e.to_string())?;
        let m = ellstab_core::estimates::hardy_stability_margin(&u, &s.nonlinearity()).map_err(|e| e.to_string())?;
        margin_worst = margin_worst.max(m.abs());
    }
    let mut unstable = Vec::new();
    for (dim, alpha) in [(11, 0.0), (12, 0.0), (14, 0.5), (15, 1.0), (20, 0.25)] {
        let s = hh(dim, alpha);
        let u = s.sample(&grid).map_err(|e| e.to_string())?;
        let idx = radial_index(&u, &s.nonlinearity(), &QuadraticFormSpec::annulus(s.params, 1e-4, 1.0))
            .map_err(|e| e.to_string())?;
        if idx.index != 0 {
            unstable.push((dim, alpha, idx.index));
        }
    }
    ensure(
        gamma_worst <= 1e-12 && off_threshold_min > 1e-6 && margin_worst <= 1e-10 && unstable.is_empty(),
        format!(
            "max |gamma| at threshold {gamma_worst:.1e}, min |gamma| off threshold {off_threshold_min:.3}, \
             max |Hardy margin| {margin_worst:.1e}, unstable supercritical {unstable:?}"
        ),
    )
}

fn key_inequality_closed_form() -> Verdict {
    let grid = RadialGrid::default_graded(None).unwrap();
    let crit = hh(10, 0.0).sample(&grid).map_err(|e| e.to_string())?;
    let i = key_inequality(&crit, &TestFunction::LinearCap, grid.r_min()).map_err(|e| e.to_string())?;
    let mut worst = f64::INFINITY;
    for (dim, alpha) in [(10, 0.0), (14, 1.0), (11, 0.0), (12, 0.25), (13, 0.0)] {
        let s = hh(dim, alpha);
        let u = s.sample(&grid).map_err(|e| e.to_string())?;
        for v in TestFunction::proof_suite(&s.params) {
            for r0 in [1e-4, 1e-3, 1e-2, 0.1, 0.5] {
                worst = worst.min(key_inequality(&u, &v, r0).map_err(|e| e.to_string())?);
            }
        }
    }
    ensure(
        (i - 2.0 / 7.0).abs() <= 1e-6 && worst >= -1e-8,
        format!("I(0,1;1-t) = {i:.9} (2/7 = {:.9}), min over suite {worst:.2e}", 2.0 / 7.0),
    )
}

fn band_exponent() -> Verdict {
    let grid = RadialGrid::default_graded(None).unwrap();
    let r_list: Vec<f64> = (1..=12).map(|k| 0.5f64.powi(k)).collect();
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for (dim, alpha) in [(11, 0.0), (14, 1.0), (12, 0.25)] {
        let s = hh(dim, alpha);
        let u = s.sample(&grid).map_err(|e| e.to_string())?;
        let slope = ur_band_bound(&u, &r_list).map_err(|e| e.to_string())?.fitted_slope.unwrap();
        let expected = HHExponents::band_exponent(dim as f64, alpha);
        worst = worst.max((slope - expected).abs());
        detail.push(format!("({dim},{alpha}) {slope:.5} vs {expected:.5}"));
    }
    ensure(worst <= 1e-3, format!("{}; max error {worst:.1e}", detail.join(", ")))
}

fn gelfand_closed_form() -> Verdict {
    let out = run(RunConfig {
        experiment: Some("gelfand".into()),
        dim: Some(vec![11]),
        family: Some("power-qn".into()),
        m_decades: Some(3.0),
        ..Default::default()
    })?;
    let r = &out.results;
    let lambda_star = r["lambda_star"].as_f64().unwrap_or(f64::NAN);
    let rel = (lambda_star / 2.925506 - 1.0).abs();
    let dev = r["extremal"]["profile_deviation"].as_f64().unwrap_or(f64::NAN);
    let rows = &out.table.as_ref().unwrap().rows;
    let all_stable = rows.iter().all(|row| row[6] == "0");
    let monotone = out.checks.iter().find(|c| c.name.starts_with("branch monotone")).map(|c| c.passed);
    ensure(
        rel <= 0.01 && dev <= 0.01 && all_stable && monotone == Some(true),
        format!(
            "lambda* {lambda_star:.7} (rel {rel:.1e} to 2.925506), profile deviation {dev:.1e}, \
             {} points all index 0: {all_stable}, monotone: {monotone:?}",
            rows.len()
        ),
    )
}

fn gelfand_qualitative() -> Verdict {
    let out = run(RunConfig {
        experiment: Some("gelfand".into()),
        dim: Some(vec![3]),
        family: Some("exp".into()),
        ..Default::default()
    })?;
    let r = &out.results;
    let interior = r["interior_max"].as_bool() == Some(true);
    let q = &r["qualitative"];
    let drift = q["sup_norm_drift"].as_f64().unwrap_or(f64::INFINITY);
    let sup = q["sup_norm_bound"].as_f64().unwrap_or(f64::INFINITY);
    let l1 = q["l1_bound"].as_f64().unwrap_or(f64::INFINITY);
    ensure(
        interior && sup.is_finite() && drift < 0.05 && l1.is_finite(),
        format!(
            "interior max {interior} (lambda* {:.5}), sup bound {sup:.4} drift {drift:.1e}, L1 bound {l1:.4}",
            r["lambda_star"].as_f64().unwrap_or(f64::NAN)
        ),
    )
}

fn degenerate_limits() -> Verdict {
    let mut mus = vec![0.0];
    mus.extend(mu_sweep());
    let out = run(RunConfig {
        experiment: Some("degenerate".into()),
        dim: Some(vec![3]),
        rho: Some(0.5),
        weight: Some("indicator".into()),
        lambda: Some(vec![20.0, 45.0]),
        mu: Some(mus.clone()),
        ..Default::default()
    })?;
    let rows = &out.table.as_ref().unwrap().rows;
    let curve: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    let at = |mu: f64| curve.iter().find(|c| (c.0 / mu.max(1e-300) - 1.0).abs() < 1e-12 || c.0 == mu).map(|c| c.1);
    let l0 = at(0.0).unwrap_or(f64::NAN);
    let l6 = at(1e6).unwrap_or(f64::NAN);
    let (e0, e6) = ((l0 / (PI * PI) - 1.0).abs(), (l6 / (4.0 * PI * PI) - 1.0).abs());
    let nondecreasing = curve.windows(2).all(|w| w[1].1 >= w[0].1);
    let runs = out.results["runs"].as_array().cloned().unwrap_or_default();
    let status = |l: f64| runs.iter().find(|r| r["lambda"].as_f64() == Some(l)).cloned().unwrap_or(Value::Null);
    let solved = status(20.0);
    let refused = status(45.0);
    let certified = solved["status"] == "solved"
        && out.checks.iter().any(|c| c.name == "ordering certificate (lambda=20)" && c.passed);
    let existence = refused["status"] == "error"
        && out.checks.iter().any(|c| c.name == "existence precondition (lambda=45)" && c.passed);
    ensure(
        e0 <= 0.005 && e6 <= 0.01 && nondecreasing && certified && existence,
        format!(
            "lambda1(0) {l0:.5} (rel {e0:.1e}), lambda1(1e6) {l6:.4} (rel {e6:.1e}), nondecreasing {nondecreasing}, \
             lambda=20 certified {certified}, lambda=45 refused {existence}"
        ),
    )
}

fn pointwise_suites() -> Verdict {
    let out = run(RunConfig {
        experiment: Some("hh-verify".into()),
        dim: Some(vec![3, 10, 11]),
        alpha: Some(vec![0.0, 1.0]),
        ..Default::default()
    })?;
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for r in out.results.as_array().cloned().unwrap_or_default() {
        let drift = r["pointwise_drift"].as_f64().unwrap_or(f64::INFINITY);
        let sup = r["pointwise_sup_ratio"].as_f64().unwrap_or(f64::INFINITY);
        worst = worst.max(drift);
        if !(sup.is_finite() && drift < 0.02) {
            bad.push(format!("N={} alpha={}", r["N"], r["alpha"]));
        }
    }
    ensure(bad.is_empty(), format!("6 cases, max drift {worst:.1e}, failing {bad:?}"))
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = |threads: usize, sub: &str| -> Result<Vec<u8>, String> {
        let dir = tmp.path().join(sub);
        let args = [
            "counterexample",
            "--dim",
            "3,5,7",
            "--r0",
            "0.3,0.1,0.05",
            "--q",
            "2",
            "--nodes",
            "1024",
            "--threads",
            &threads.to_string(),
            "--report",
            dir.to_str().unwrap(),
        ];
        let cfg = ellstab_cli::parse_config(args).map_err(|e| e.to_string())?;
        let out = run(cfg.clone())?;
        ellstab_cli::report::persist(&dir, "counterexample", &cfg, &out).map_err(|e| e.to_string())?;
        std::fs::read(dir.join("counterexample.csv")).map_err(|e| e.to_string())
    };
    let same = csv(1, "a")? == csv(4, "b")? && csv(4, "b")? == csv(2, "c")?;

    let params = params(3, 0.0);
    let grid = RadialGrid::new(GridKind::Uniform, 96, 1.0 / 96.0, None).unwrap();
    let spec = QuadraticFormSpec::ball(params, &grid);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut mismatches = 0;
    let mut nontrivial = 0;
    for _ in 0..50 {
        let amps: Vec<f64> = (0..4).map(|_| rng.gen_range(-150.0..250.0)).collect();
        let v: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&r| amps.iter().enumerate().map(|(k, a)| a * (k as f64 * PI * r).cos()).sum())
            .collect();
        let pencil = assemble_with_potential(&grid, &v, &spec).map_err(|e| e.to_string())?;
        let idx = morse_index(&pencil);
        let k = (idx.index + 2).min(pencil.len());
        let bisection = smallest_eigenvalues(&pencil, k).map_err(|e| e.to_string())?;
        let count = bisection.iter().filter(|&&e| e < -idx.tolerance).count();
        mismatches += usize::from(count != idx.index);
        nontrivial += usize::from(idx.index > 0);
    }
    ensure(
        same && mismatches == 0,
        format!("CSV byte-identical across 1/2/4 threads: {same}; inertia vs bisection mismatches {mismatches}/50 ({nontrivial} nonzero)"),
    )
}

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Verdict,
}

fn main() {
    let secs = |s: u64| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: "1", title: "counterexample Morse indices", budget: secs(10), run: counterexample_index },
        Criterion { id: "2", title: "norm quotient divergence rate", budget: secs(5), run: quotient_divergence },
        Criterion { id: "3", title: "spectral oracle", budget: secs(2), run: spectral_oracle },
        Criterion { id: "4", title: "Hardy inequality sweep", budget: secs(5), run: hardy_sweep },
        Criterion { id: "5", title: "Hénon exponents and optimality", budget: secs(10), run: henon_exponents },
        Criterion { id: "6", title: "key inequality", budget: secs(5), run: key_inequality_closed_form },
        Criterion { id: "7", title: "band-bound exponent", budget: secs(5), run: band_exponent },
        Criterion { id: "8", title: "Gelfand extremal closed form", budget: secs(60), run: gelfand_closed_form },
        Criterion { id: "9", title: "Gelfand branch, exponential", budget: secs(30), run: gelfand_qualitative },
        Criterion { id: "10", title: "degenerate problem", budget: secs(30), run: degenerate_limits },
        Criterion { id: "11", title: "pointwise estimate suites", budget: secs(10), run: pointwise_suites },
        Criterion { id: "12", title: "determinism and inertia", budget: None, run: determinism },
    ];
    let mut failed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let verdict = (c.run)();
        let elapsed = start.elapsed();
        let in_time = c.budget.map_or(true, |b| elapsed <= b);
        let (ok, detail) = match verdict {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        let budget = c.budget.map_or("no limit".to_string(), |b| format!("limit {} s", b.as_secs()));
        println!(
            "{} {:>2} {}: {detail} [{:.2} s, {budget}{}]",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over time" }
        );
        if !ok {
            failed.push(c.id);
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
