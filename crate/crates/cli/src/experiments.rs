//! The five experiment families.

use rayon::prelude::*;
use serde_json::{json, Value};

use ellstab_core::degenerate::{
    lambda1_curve, lambda1_inner, mu_sweep, signed_solutions, weighted_eigen, DegenerateSpec, Weight,
};
use ellstab_core::estimates::{
    check_pointwise_estimate, hardy_stability_margin, key_inequality, linear_fit, lp_norm, pointwise_rows,
    ur_band_bound, with_refinement, PointwiseCase, TestFunction,
};
use ellstab_core::gelfand::{
    extremal_diagnostics, joseph_lundgren_exponent, log_grid, shoot, trace_branch, BranchReport, ShootOptions,
};
use ellstab_core::profiles::{
    gamma_exponent, psi_profile, recover_nonlinearity, synthesize_solution, ExplicitHh, HHExponents, HhCase,
};
use ellstab_core::spectral::{full_morse_index_potential, radial_index, QuadraticFormSpec};
use ellstab_core::{Error, GridKind, Nonlinearity, ProblemParams, RadialGrid, RadialProfile};

use crate::report::{num, Check, Outcome, Table};
use crate::{Failure, RunConfig};

pub const COUNTEREXAMPLE_HEADER: [&str; 9] =
    ["N", "r0", "sup_norm", "l1_norm", "lp_norm", "quotient", "radial_index", "index_inner", "index_annulus"];
pub const GELFAND_HEADER: [&str; 7] = ["N", "m", "lambda", "sup_norm", "l1_norm", "h1_norm", "radial_index"];
pub const HH_HEADER: [&str; 7] = ["N", "alpha", "case", "r", "u_abs", "bound", "ratio"];
pub const DEGENERATE_HEADER: [&str; 2] = ["mu", "lambda1"];

/// Inner radius of the annulus on which explicit supercritical solutions are tested for stability.
pub const STABILITY_CUTOFF: f64 = 1e-4;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn grid_for(cfg: &RunConfig, anchor: Option<f64>) -> Result<RadialGrid, Failure> {
    let nodes = cfg.nodes.unwrap_or(2048);
    let r_min = cfg.r_min.unwrap_or(1e-6);
    RadialGrid::new(GridKind::Graded, nodes, r_min, anchor).map_err(|e| usage(e.to_string()))
}

fn params(dim: u32, alpha: f64) -> Result<ProblemParams, Failure> {
    ProblemParams::new(dim, alpha).map_err(|e| usage(e.to_string()))
}

fn pairs(cfg: &RunConfig, dims: Vec<u32>, alphas: Vec<f64>) -> Result<Vec<ProblemParams>, Failure> {
    let dims = cfg.dim.clone().unwrap_or(dims);
    let alphas = cfg.alpha.clone().unwrap_or(alphas);
    let mut out = Vec::new();
    for &d in &dims {
        for &a in &alphas {
            out.push(params(d, a)?);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- counterexample

struct CounterRow {
    dim: u32,
    r0: f64,
    sup: f64,
    l1: f64,
    lq: f64,
    radial: usize,
    inner: usize,
    annulus: usize,
}

fn counter_row(cfg: &RunConfig, dim: u32, r0: f64, q: f64) -> Result<CounterRow, Failure> {
    let p = params(dim, 0.0)?;
    let grid = grid_for(cfg, Some(r0))?;
    let psi = psi_profile(p, r0).map_err(|e| usage(e.to_string()))?;
    let u = synthesize_solution(&psi, &grid)?;
    let f = recover_nonlinearity(&psi, &grid)?;
    let index = |spec: QuadraticFormSpec| radial_index(&u, &f, &spec).map(|c| c.index);
    Ok(CounterRow {
        dim,
        r0,
        sup: lp_norm(&u, f64::INFINITY)?,
        l1: lp_norm(&u, 1.0)?,
        lq: lp_norm(&u, q)?,
        radial: index(QuadraticFormSpec::ball(p, &grid))?,
        inner: index(QuadraticFormSpec::inner_ball(p, &grid, r0))?,
        annulus: index(QuadraticFormSpec::annulus(p, r0, 1.0))?,
    })
}

pub fn counterexample(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let dims = cfg.dim.clone().unwrap_or_else(|| vec![3]);
    let r0s = cfg.r0.clone().unwrap_or_else(|| vec![0.05]);
    let q = cfg.q.unwrap_or(2.0);
    if !(q >= 1.0) {
        return Err(usage(format!("--q must be at least 1, got {q}")));
    }
    if let Some(r0) = r0s.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        return Err(usage(format!("r0 must lie in (0, 1), got {r0}")));
    }
    let jobs: Vec<(u32, f64)> = dims.iter().flat_map(|&d| r0s.iter().map(move |&r| (d, r))).collect();
    let rows: Vec<CounterRow> = jobs.par_iter().map(|&(d, r)| counter_row(cfg, d, r, q)).collect::<Result<_, _>>()?;

    let mut table = Table::new(&COUNTEREXAMPLE_HEADER);
    let mut checks = Vec::new();
    let mut entries = Vec::new();
    for r in &rows {
        let quotient = r.sup / r.lq;
        table.push(vec![
            r.dim.to_string(),
            num(r.r0),
            num(r.sup),
            num(r.l1),
            num(r.lq),
            num(quotient),
            r.radial.to_string(),
            r.inner.to_string(),
            r.annulus.to_string(),
        ]);
        let tag = format!("N={} r0={}", r.dim, r.r0);
        checks.push(Check::equal(
            format!("radial index on B_1 ({tag})"),
            "counterexample is unstable with radial Morse index exactly 1 on the unit ball",
            r.radial as f64,
            1.0,
        ));
        checks.push(Check::equal(
            format!("radial index on B_r0 ({tag})"),
            "counterexample is stable on the inner ball B_r0",
            r.inner as f64,
            0.0,
        ));
        checks.push(Check::equal(
            format!("radial index on annulus ({tag})"),
            "counterexample is stable on the annulus r0 < |x| < 1",
            r.annulus as f64,
            0.0,
        ));
        entries.push(json!({"N": r.dim, "r0": r.r0, "quotient": quotient}));
    }
    let mut fits = Vec::new();
    for &d in &dims {
        let pts: Vec<(f64, f64)> =
            rows.iter().filter(|r| r.dim == d).map(|r| (r.r0.ln(), (r.sup / r.lq).ln())).collect();
        if pts.len() >= 3 {
            let (slope, _, rms) = linear_fit(&pts)?;
            checks.push(Check::new(
                format!("quotient growth N={d}"),
                "sup/L^q quotient grows without bound as r0 decreases (negative log-log slope)",
                slope < 0.0,
                slope,
                0.0,
            ));
            fits.push(json!({"N": d, "q": q, "slope": slope, "rms": rms}));
        }
    }
    Ok(Outcome { table: Some(table), results: json!({"rows": entries, "quotient_fits": fits}), checks })
}

// ---------------------------------------------------------------- morse

fn parse_potential(text: &str) -> Result<Box<dyn Fn(f64) -> f64 + Sync>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let number = |s: &str| s.parse::<f64>().map_err(|_| usage(format!("bad number {s:?} in potential {text:?}")));
    match parts.as_slice() {
        ["zero"] => Ok(Box::new(|_| 0.0)),
        ["const", v] => {
            let v = number(v)?;
            Ok(Box::new(move |_| v))
        }
        ["power", c, e] => {
            let (c, e) = (number(c)?, number(e)?);
            Ok(Box::new(move |r: f64| c * r.powf(e)))
        }
        _ => Err(usage(format!("unknown potential {text:?}; use zero, const:V or power:C:E"))),
    }
}

pub fn morse(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let text = cfg.potential.clone().unwrap_or_else(|| "zero".into());
    let v = parse_potential(&text)?;
    let l_max = cfg.l_max.unwrap_or(8);
    let grid = grid_for(cfg, None)?;
    let potential: Vec<f64> = grid.nodes().iter().map(|&r| v(r)).collect();
    let mut checks = Vec::new();
    let mut out = Vec::new();
    for p in pairs(cfg, vec![3], vec![0.0])? {
        let spec = QuadraticFormSpec::ball(p, &grid);
        let rep = full_morse_index_potential(&grid, &potential, &spec, l_max)?;
        if let Some(e) = cfg.expect_radial {
            checks.push(Check::equal(
                format!("radial index N={}", p.dim()),
                "radial Morse index equals the expected count",
                rep.radial_index as f64,
                e as f64,
            ));
        }
        if let Some(e) = cfg.expect_full {
            checks.push(Check::equal(
                format!("full index N={}", p.dim()),
                "full Morse index (sum over spherical harmonics) equals the expected count",
                rep.full_index.unwrap_or(0) as f64,
                e as f64,
            ));
        }
        let per_l: Vec<Value> = rep
            .per_l_counts
            .unwrap_or_default()
            .iter()
            .map(|a| json!({"l": a.l, "count": a.count, "multiplicity": a.multiplicity}))
            .collect();
        out.push(json!({
            "N": p.dim(),
            "potential": text,
            "radial_index": rep.radial_index,
            "full_index": rep.full_index,
            "per_l_counts": per_l,
            "smallest_eigenvalues": rep.smallest_eigenvalues,
            "marginal": rep.marginal,
            "tolerance": rep.tolerance,
            "grid_size": rep.grid_size,
        }));
    }
    let results = if out.len() == 1 { out.pop().unwrap() } else { Value::Array(out) };
    Ok(Outcome { table: None, results, checks })
}

// ---------------------------------------------------------------- hh-verify

/// A stable radial solution for `(N, α)`: the explicit singular one when `N ≥ 10 + 4α`,
/// otherwise the minimal Gelfand solution of `-Δu = λ|x|^α e^u` with `u(0) = 1/2`.
pub fn stable_solution(params: ProblemParams, grid: &RadialGrid) -> Result<(RadialProfile, Nonlinearity), Error> {
    match PointwiseCase::for_params(&params) {
        PointwiseCase::Logarithmic => {
            let hh = ExplicitHh::new(params, HhCase::Critical { scale: 2.0 })?;
            Ok((hh.sample(grid)?, hh.nonlinearity()))
        }
        PointwiseCase::Power => {
            let gamma = gamma_exponent(&params)?.gamma;
            let hh = ExplicitHh::new(params, HhCase::Supercritical { gamma })?;
            Ok((hh.sample(grid)?, hh.nonlinearity()))
        }
        PointwiseCase::Bounded => {
            let f = Nonlinearity::Exponential { coeff: 1.0, rate: 1.0 };
            let point = shoot(params, &f, 0.5, &ShootOptions::new(grid.clone()))?;
            Ok((point.profile, f.scaled(point.lambda)))
        }
    }
}

fn hh_one(cfg: &RunConfig, p: ProblemParams) -> Result<(Vec<Vec<String>>, Vec<Check>, Value), Failure> {
    let grid = grid_for(cfg, Some(STABILITY_CUTOFF))?;
    let case = PointwiseCase::for_params(&p);
    let tag = format!("N={} alpha={}", p.dim(), p.alpha());
    let (u, f) = stable_solution(p, &grid)?;
    let mut checks = Vec::new();
    let exps = gamma_exponent(&p)?;

    let (_, rows) = pointwise_rows(&u)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                p.dim().to_string(),
                num(p.alpha()),
                case.label().into(),
                num(r.r),
                num(r.u_abs),
                num(r.bound),
                num(r.ratio),
            ]
        })
        .collect();
    let build = |g: &RadialGrid| stable_solution(p, g).map(|s| s.0);
    let pw = with_refinement(&grid, build, check_pointwise_estimate)?;
    checks.push(Check::at_most(
        format!("pointwise bound drift ({tag})"),
        format!("|u(r)| <= C ||u||_H1(annulus) x {} profile, constant stable under grid doubling", case.label()),
        pw.refinement_drift.unwrap_or(f64::INFINITY),
        0.02,
    ));
    checks.push(Check::new(
        format!("pointwise bound finite ({tag})"),
        "pointwise estimate constant is finite",
        pw.sup_ratio.is_finite(),
        pw.sup_ratio,
        f64::INFINITY,
    ));

    let stable = radial_index(&u, &f, &QuadraticFormSpec::annulus(p, STABILITY_CUTOFF, 1.0))?;
    checks.push(Check::equal(
        format!("stability on [1e-4, 1] ({tag})"),
        "radial Morse index of the reference solution vanishes",
        stable.index as f64,
        0.0,
    ));

    let r0s = [1e-4, 1e-2, 0.1, 0.5];
    let mut key_min = f64::INFINITY;
    for v in TestFunction::proof_suite(&p) {
        for r0 in r0s {
            key_min = key_min.min(key_inequality(&u, &v, r0)?);
        }
    }
    checks.push(Check::at_least(
        format!("key inequality ({tag})"),
        "weighted integral I(r0, 1; v) is nonnegative for stable solutions over the test-function suite",
        key_min,
        -1e-8,
    ));

    let mut extra = json!({});
    if case != PointwiseCase::Bounded {
        let r_list: Vec<f64> = (1..=12).map(|k| 0.5f64.powi(k)).collect();
        let band = with_refinement(&grid, build, |u| ur_band_bound(u, &r_list))?;
        let slope = band.fitted_slope.unwrap_or(f64::NAN);
        let expected = HHExponents::band_exponent(p.n(), p.alpha());
        checks.push(Check::at_most(
            format!("band exponent ({tag})"),
            "log-log slope of the band integral of u_r^2 equals 3 - N + alpha + sqrt((2+alpha)(2N-2+alpha))",
            (slope - expected).abs(),
            1e-3,
        ));
        checks.push(Check::at_most(
            format!("band bound drift ({tag})"),
            "band-integral constant stable under grid doubling",
            band.refinement_drift.unwrap_or(f64::INFINITY),
            0.02,
        ));
        extra = json!({"band_slope": slope, "band_exponent": expected, "band_sup_ratio": band.sup_ratio});
    }
    match case {
        PointwiseCase::Logarithmic => {
            checks.push(Check::at_most(
                format!("gamma at threshold ({tag})"),
                "gamma(N, alpha) vanishes exactly when N = 10 + 4 alpha",
                exps.gamma.abs(),
                1e-12,
            ));
            let margin = hardy_stability_margin(&u, &f)?;
            checks.push(Check::at_most(
                format!("Hardy margin ({tag})"),
                "critical solution attains equality in the Hardy stability bound r^(2+alpha) f'(u) <= (N-2)^2/4",
                margin.abs(),
                1e-10,
            ));
        }
        PointwiseCase::Power => {
            let hh = ExplicitHh::new(p, HhCase::Supercritical { gamma: exps.gamma })?;
            let w = hh.stability_weight();
            let bound = (p.n() - 2.0).powi(2) / 4.0;
            checks.push(Check::at_most(
                format!("stability weight ({tag})"),
                "(-gamma+alpha+2)(gamma+N-2) <= (N-2)^2/4",
                w - bound,
                1e-12,
            ));
        }
        PointwiseCase::Bounded => {}
    }
    let summary = json!({
        "N": p.dim(),
        "alpha": p.alpha(),
        "case": case.label(),
        "gamma": exps.gamma,
        "pointwise_sup_ratio": pw.sup_ratio,
        "pointwise_drift": pw.refinement_drift,
        "key_inequality_min": key_min,
        "radial_index": stable.index,
        "band": extra,
    });
    Ok((table, checks, summary))
}

pub fn hh_verify(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let ps = pairs(cfg, vec![10, 11], vec![0.0])?;
    let parts: Vec<_> = ps.par_iter().map(|&p| hh_one(cfg, p)).collect::<Result<_, _>>()?;
    let mut table = Table::new(&HH_HEADER);
    let mut checks = Vec::new();
    let mut results = Vec::new();
    for (rows, c, s) in parts {
        rows.into_iter().for_each(|r| table.push(r));
        checks.extend(c);
        results.push(s);
    }
    Ok(Outcome { table: Some(table), results: Value::Array(results), checks })
}

// ---------------------------------------------------------------- gelfand

fn family(text: &str, p: &ProblemParams) -> Result<Nonlinearity, Failure> {
    match text {
        "exp" => Ok(Nonlinearity::Exponential { coeff: 1.0, rate: 1.0 }),
        "const" => Ok(Nonlinearity::Constant { value: 1.0 }),
        "power-qn" => {
            let q = joseph_lundgren_exponent(p.dim()).map_err(|e| usage(e.to_string()))?;
            Ok(Nonlinearity::Power { coeff: 1.0, exponent: q, shift: 1.0 })
        }
        other => match other.strip_prefix("power:").map(str::parse::<f64>) {
            Some(Ok(e)) if e >= 1.0 => Ok(Nonlinearity::Power { coeff: 1.0, exponent: e, shift: 1.0 }),
            _ => Err(usage(format!("unknown family {other:?}; use exp, const, power-qn or power:P (P >= 1)"))),
        },
    }
}

fn gelfand_one(
    cfg: &RunConfig,
    p: ProblemParams,
    fam: &str,
    ms: &[f64],
    fine: &[f64],
) -> Result<(BranchReport, Vec<Check>, Value), Failure> {
    let f = family(fam, &p)?;
    let opts = ShootOptions::new(grid_for(cfg, None)?);
    let rep = trace_branch(p, &f, ms, &opts)?;
    let tag = format!("N={} alpha={} {fam}", p.dim(), p.alpha());
    let mut checks = Vec::new();
    if rep.points.len() < 3 {
        return Err(Failure::Runtime(anyhow::anyhow!("only {} branch points could be computed", rep.points.len())));
    }
    // the sample nearest the fold may already sit past it
    let minimal = rep.minimal_branch();
    let minimal = if rep.interior_max { &minimal[..minimal.len() - 1] } else { minimal };
    let worst_index = minimal.iter().map(|b| b.radial_morse_index).max().unwrap_or(0);
    checks.push(Check::equal(
        format!("minimal branch stable ({tag})"),
        "every solution on the minimal branch below the turning point has radial Morse index 0",
        worst_index as f64,
        0.0,
    ));
    checks.push(Check::equal(
        format!("branch monotone ({tag})"),
        "minimal solutions increase pointwise with lambda",
        rep.monotonicity_violations() as f64,
        0.0,
    ));
    let worst_res = rep.points.iter().map(|b| b.residual).fold(0.0, f64::max);
    checks.push(Check::at_most(
        format!("residual ({tag})"),
        "discrete flux residual of each shot is small",
        worst_res,
        1e-6,
    ));
    let mid = rep.points.len() / 2;
    checks.push(Check::new(
        format!("small solutions ({tag})"),
        "lambda(m) tends to 0 as m tends to 0",
        rep.points[0].lambda < rep.points[mid].lambda,
        rep.points[0].lambda,
        rep.points[mid].lambda,
    ));
    let mut extremal = Value::Null;
    if let Some(reference) = rep.extremal_reference {
        let d = extremal_diagnostics(&rep, None)?;
        let rel = (rep.lambda_star / reference.lambda_star - 1.0).abs();
        checks.push(Check::at_most(
            format!("extremal parameter ({tag})"),
            "lambda* agrees with (2/(q-1))(N-2-2/(q-1)) for the singular extremal solution",
            rel,
            0.01,
        ));
        let dev = d.deviation.unwrap_or(f64::INFINITY);
        checks.push(Check::at_most(
            format!("extremal profile ({tag})"),
            "near-extremal profile matches r^(-2/(q-1)) - 1 on [0.1, 1]",
            dev,
            0.01,
        ));
        extremal = json!({"q": reference.q, "lambda_star_closed_form": reference.lambda_star, "profile_deviation": dev, "near_extremal_lambda": d.near_extremal_lambda});
    }
    let mut qualitative = Value::Null;
    if fam == "exp" && p.dim() <= 9 {
        checks.push(Check::new(
            format!("turning point ({tag})"),
            "lambda(m) has an interior maximum (finite extremal parameter)",
            rep.interior_max,
            rep.lambda_star,
            f64::NAN,
        ));
        if let Some(first) = rep.first_unstable() {
            let off = (first as i64 - rep.minimal_len as i64).abs();
            checks.push(Check::at_most(
                format!("stability boundary ({tag})"),
                "radial Morse index becomes 1 within one m-step of the turning point",
                off as f64,
                1.0,
            ));
        }
        let refined = trace_branch(p, &f, fine, &opts)?;
        let d = extremal_diagnostics(&rep, Some(&refined))?;
        checks.push(Check::at_most(
            format!("sup norm bound ({tag})"),
            "sup norm over the minimal branch is bounded, stable under m-grid refinement",
            d.sup_norm.refinement_drift.unwrap_or(f64::INFINITY),
            0.05,
        ));
        checks.push(Check::new(
            format!("L1 bound ({tag})"),
            "L1 norms are uniformly bounded along the minimal branch",
            d.l1.sup_ratio.is_finite(),
            d.l1.sup_ratio,
            f64::INFINITY,
        ));
        qualitative = json!({
            "m_star": rep.m_star,
            "sup_norm_bound": d.sup_norm.sup_ratio,
            "sup_norm_drift": d.sup_norm.refinement_drift,
            "l1_bound": d.l1.sup_ratio,
            "l1_drift": d.l1.refinement_drift,
        });
    }
    let summary = json!({
        "N": p.dim(),
        "alpha": p.alpha(),
        "family": fam,
        "lambda_star": rep.lambda_star,
        "lambda_max": rep.lambda_max,
        "interior_max": rep.interior_max,
        "minimal_len": rep.minimal_len,
        "points": rep.points.len(),
        "failures": rep.failures.iter().map(|(m, e)| json!({"m": m, "error": e})).collect::<Vec<_>>(),
        "extremal": extremal,
        "qualitative": qualitative,
    });
    Ok((rep, checks, summary))
}

pub fn gelfand(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let fam = cfg.family.clone().unwrap_or_else(|| "exp".into());
    let m_min = cfg.m_min.unwrap_or(1e-2);
    let decades = cfg.m_decades.unwrap_or(3.0);
    let per = cfg.m_per_decade.unwrap_or(8);
    if !(m_min > 0.0 && decades > 0.0 && per >= 1) {
        return Err(usage("need m-min > 0, m-decades > 0 and m-per-decade >= 1"));
    }
    let count = (decades * per as f64).round() as usize + 1;
    let m_max = m_min * 10f64.powf(decades);
    let ms = log_grid(m_min, m_max, count.max(3));
    let fine = log_grid(m_min, m_max, 2 * count.max(3) - 1);
    let ps = pairs(cfg, vec![3], vec![0.0])?;
    for p in &ps {
        family(&fam, p)?;
    }
    let parts: Vec<_> = ps.par_iter().map(|&p| gelfand_one(cfg, p, &fam, &ms, &fine)).collect::<Result<_, _>>()?;
    let mut table = Table::new(&GELFAND_HEADER);
    let mut checks = Vec::new();
    let mut results = Vec::new();
    for (rep, c, s) in parts {
        for b in &rep.points {
            table.push(vec![
                rep.params.dim().to_string(),
                num(b.m),
                num(b.lambda),
                num(b.sup_norm),
                num(b.l1_norm),
                num(b.h1_norm),
                b.radial_morse_index.to_string(),
            ]);
        }
        checks.extend(c);
        results.push(s);
    }
    let results = if results.len() == 1 { results.pop().unwrap() } else { Value::Array(results) };
    Ok(Outcome { table: Some(table), results, checks })
}

// ---------------------------------------------------------------- degenerate

pub fn degenerate(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let dims = cfg.dim.clone().unwrap_or_else(|| vec![3]);
    let [dim] = dims.as_slice() else {
        return Err(usage("degenerate runs take a single --dim"));
    };
    let p = params(*dim, 0.0)?;
    let rho = cfg.rho.unwrap_or(0.5);
    let weight = match cfg.weight.as_deref().unwrap_or("indicator") {
        "indicator" => Weight::Indicator,
        "ramp" => Weight::Ramp,
        other => return Err(usage(format!("unknown weight {other:?}; use indicator or ramp"))),
    };
    let lambdas = cfg.lambda.clone().unwrap_or_else(|| vec![20.0]);
    let mus = cfg.mu.clone().unwrap_or_else(|| std::iter::once(0.0).chain(mu_sweep()).collect());
    if let Some(mu) = mus.iter().find(|&&m| !(m >= 0.0 && m.is_finite())) {
        return Err(usage(format!("mu must be finite and nonnegative, got {mu}")));
    }
    let tol = cfg.tol.unwrap_or(1e-9);
    let max_iter = cfg.max_iter.unwrap_or(200_000);
    let grid = grid_for(cfg, Some(rho))?;
    let cubic = Nonlinearity::Power { coeff: 1.0, exponent: 3.0, shift: 0.0 };
    let make = |lambda: f64| {
        DegenerateSpec::new(
            p,
            rho,
            weight,
            Nonlinearity::Power { coeff: lambda, exponent: 1.0, shift: 0.0 },
            cubic.clone(),
        )
        .map_err(|e| usage(e.to_string()))
    };
    let base = make(lambdas.first().copied().unwrap_or(1.0))?;
    let curve = lambda1_curve(&base, &mus, &grid)?;
    let ball = weighted_eigen(&base, 0.0, 1, &grid)?[0];
    let inner = lambda1_inner(&base, &grid)?;

    let mut table = Table::new(&DEGENERATE_HEADER);
    for (mu, l) in &curve {
        table.push(vec![num(*mu), num(*l)]);
    }
    let mut checks = Vec::new();
    let drops = curve.windows(2).filter(|w| w[1].0 >= w[0].0 && w[1].1 < w[0].1).count();
    checks.push(Check::equal(
        "penalized eigenvalue monotone",
        "lambda_1(mu) is nondecreasing in mu",
        drops as f64,
        0.0,
    ));
    let top = curve.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::at_most(
        "penalized eigenvalue bounded",
        "lambda_1(mu) stays below the Dirichlet eigenvalue of the inner ball",
        top,
        inner * (1.0 + 1e-9),
    ));

    let runs: Vec<_> = lambdas
        .par_iter()
        .map(|&l| make(l).map(|spec| (l, signed_solutions(&spec, &grid, max_iter, tol))))
        .collect::<Result<_, _>>()?;
    let mut outcomes = Vec::new();
    for (lambda, res) in runs {
        let tag = format!("lambda={lambda}");
        let inside = ball < lambda && lambda < inner;
        match res {
            Ok(rep) => {
                let pos = rep.positive_solution.as_ref();
                let neg = rep.negative_solution.as_ref();
                let residual = pos.map_or(0.0, |s| s.residual).max(neg.map_or(0.0, |s| s.residual));
                checks.push(Check::new(
                    format!("signed pair ({tag})"),
                    "one positive and one negative solution exist when lambda_1 < lambda < lambda_1(inner ball)",
                    inside && pos.is_some() && neg.is_some(),
                    lambda,
                    inner,
                ));
                checks.push(Check::new(
                    format!("ordering certificate ({tag})"),
                    "subsolution <= solution <= supersolution at every node",
                    rep.ordering_certificate,
                    residual,
                    10.0 * tol,
                ));
                outcomes.push(json!({
                    "lambda": lambda,
                    "status": "solved",
                    "iterations": rep.iterations,
                    "residual": residual,
                    "positive_max": pos.map(|s| s.profile.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
                    "negative_min": neg.map(|s| s.profile.u.iter().cloned().fold(f64::INFINITY, f64::min)),
                    "supersolution_mu": pos.map(|s| s.mu),
                }));
            }
            Err(e) => {
                let expected = match &e {
                    Error::Existence(_) => lambda >= inner,
                    Error::Precondition(_) => lambda <= ball,
                    _ => false,
                };
                checks.push(Check::new(
                    format!("existence precondition ({tag})"),
                    "no supersolution exists once lambda >= lambda_1(inner ball); error raised only outside (lambda_1, lambda_1(inner ball))",
                    expected && !inside,
                    lambda,
                    inner,
                ));
                outcomes.push(json!({"lambda": lambda, "status": "error", "error": e.to_string()}));
            }
        }
    }
    let results = json!({
        "N": dim,
        "rho": rho,
        "lambda1_ball": ball,
        "lambda1_inner_ball": inner,
        "runs": outcomes,
    });
    Ok(Outcome { table: Some(table), results, checks })
}
