//! Scenario execution: solve, run the requested checks, emit reports and
//! plot data, and summarize one line per check.
//!
//! Output layout per scenario: `out/<name>/report.json`, `field.csv`
//! (columns r, u, residual), `estimate.csv` (columns r, u, lhs, rhs_line,
//! slack) and, on kernel Monte-Carlo failures, `kernel_witnesses.csv`.
//! A flat `out/summary.csv` collects one row per estimate check. All outputs
//! are deterministic for a fixed (config, seed, grid): reports carry no
//! timings and every reduction runs in a fixed order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use liyau::{
    calibrate_tolerance_constant, check_bochner_identity, check_global_estimate, check_h_equation,
    check_identities, check_liouville, check_local_estimate, corrupt_field, coth_bound_check,
    cs_chain_check, harnack, lemma34_monte_carlo, liouville_conditions, optimize_params,
    quintic_cutoff, residual, solve_newton, sup_inf_bundle, verify_cutoff, EstimateParams,
    EstimateReport, Field, HarnackReport, IdentityCheck, LiouvilleReport, ModelSpace,
    NonlinearityFamily, RadialGrid, SpaceSummary,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{parse_config, CheckKind, Config, ScenarioSpec};

pub const DEFAULT_GRID: usize = 512;
pub const DEFAULT_SEED: u64 = 42;
const DEFAULT_LIOUVILLE_GRAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub grid_override: Option<usize>,
    pub seed_override: Option<u64>,
    pub check_filter: Option<CheckKind>,
}

#[derive(Debug)]
pub enum RunFailure {
    /// Unusable configuration (parse error or invalid scenario data); exit 2.
    Config(String),
    /// Environment failure (I/O); exit 2.
    Other(anyhow::Error),
}

pub struct RunOutcome {
    pub all_passed: bool,
    pub lines: Vec<String>,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum CheckReport {
    Estimate(EstimateReport),
    Harnack(HarnackReport),
    Liouville(LiouvilleReport),
    Identities(IdentityCheck),
    Kernel(KernelReport),
    Error { message: String },
}

impl CheckReport {
    fn pass(&self) -> bool {
        match self {
            CheckReport::Estimate(r) => r.pass,
            CheckReport::Harnack(r) => r.pass,
            CheckReport::Liouville(r) => r.pass,
            CheckReport::Identities(r) => r.pass,
            CheckReport::Kernel(r) => r.pass,
            CheckReport::Error { .. } => false,
        }
    }

    fn brief(&self) -> String {
        match self {
            CheckReport::Estimate(r) => format!(
                "min_slack={:.6e} rhs={:.6e} tol={:.3e}",
                r.min_slack, r.rhs.total, r.tolerance
            ),
            CheckReport::Harnack(r) => format!(
                "H={:.6e} grad_slack={:.6e} supinf_slack={:.6e} quad_gap={:.3e}",
                r.h_const, r.grad_bound_slack, r.supinf_slack, r.quadrature_gap
            ),
            CheckReport::Liouville(r) => format!(
                "verdict={} grad_sup={} note={:?}",
                match &r.verdict {
                    liyau::LiouvilleVerdict::Holds => "holds".to_string(),
                    liyau::LiouvilleVerdict::Fails { condition, .. } =>
                        format!("fails({condition})"),
                    liyau::LiouvilleVerdict::Unknown => "unknown".to_string(),
                },
                r.gradient_sup
                    .map_or("n/a".to_string(), |g| format!("{g:.3e}")),
                r.note
            ),
            CheckReport::Identities(r) => format!(
                "h_eq={:.3e}/{:.3e} bochner={:.3e}/{:.3e}",
                r.h_equation_sup, r.h_equation_tol, r.bochner_sup, r.bochner_tol
            ),
            CheckReport::Kernel(r) => format!(
                "lemma34_min={:.3e} c1={:.4} c2={:.4} coth_min={:.3e}",
                r.lemma34_min_normalized_slack, r.cutoff_c1, r.cutoff_c2, r.coth_min_slack
            ),
            CheckReport::Error { message } => format!("error: {message}"),
        }
    }
}

#[derive(Serialize)]
struct KernelReport {
    lemma34_samples: u64,
    lemma34_seed: u64,
    lemma34_min_normalized_slack: f64,
    lemma34_failures: usize,
    cutoff_c1: f64,
    cutoff_c2: f64,
    cutoff_conditions: liyau::inequality_kernel::CutoffCheck,
    coth_min_slack: f64,
    cs_trials: u64,
    cs_min_normalized_slack: f64,
    pass: bool,
}

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum SolveSummary {
    Converged {
        iterations: usize,
        residual_norm: f64,
        u_min: f64,
        u_max: f64,
    },
    Failed {
        error: String,
    },
}

#[derive(Serialize)]
struct ScenarioReport {
    name: String,
    grid_intervals: usize,
    grid_h: f64,
    seed: u64,
    c_tol: f64,
    space: Option<SpaceSummary>,
    family: Option<String>,
    corrupted: bool,
    solve: Option<SolveSummary>,
    checks: BTreeMap<&'static str, CheckReport>,
    pass: bool,
}

struct ScenarioOutcome {
    report: ScenarioReport,
    lines: Vec<String>,
    witnesses_csv: Option<String>,
    field_csv: Option<String>,
    estimate_csv: Option<String>,
    identities_csv: Option<String>,
    summary_rows: Vec<String>,
}

pub fn run(opts: &RunOptions) -> Result<RunOutcome, RunFailure> {
    let text = fs::read_to_string(&opts.config_path).map_err(|e| {
        RunFailure::Other(anyhow::anyhow!(
            "cannot read config {}: {e}",
            opts.config_path.display()
        ))
    })?;
    let config: Config = parse_config(&text).map_err(|e| {
        let loc = e
            .span()
            .map(|s| {
                let line = text[..s.start].lines().count();
                let col = s.start - text[..s.start].rfind('\n').map_or(0, |p| p + 1) + 1;
                format!(" at line {line}, column {col}")
            })
            .unwrap_or_default();
        RunFailure::Config(format!("{}{loc}: {}", opts.config_path.display(), e.message()))
    })?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| RunFailure::Other(e.into()))?;

    let outcomes: Vec<Result<ScenarioOutcome, RunFailure>> = pool.install(|| {
        config
            .scenarios
            .par_iter()
            .map(|sc| run_scenario(sc, &config, opts))
            .collect()
    });

    let mut all_passed = true;
    let mut lines = Vec::new();
    let mut summary_rows = vec![
        "scenario,check,mu,eps,radius,k,a_sigma,b_sigma,c_sigma,rhs,max_lhs,min_slack,pass"
            .to_string(),
    ];
    for outcome in outcomes {
        let outcome = outcome?;
        all_passed &= outcome.report.pass;
        write_scenario_outputs(&opts.out_dir, &outcome).map_err(RunFailure::Other)?;
        lines.extend(outcome.lines);
        summary_rows.extend(outcome.summary_rows);
    }
    if summary_rows.len() > 1 {
        fs::create_dir_all(&opts.out_dir)
            .and_then(|_| fs::write(opts.out_dir.join("summary.csv"), summary_rows.join("\n") + "\n"))
            .with_context(|| format!("writing {}", opts.out_dir.join("summary.csv").display()))
            .map_err(RunFailure::Other)?;
    }
    Ok(RunOutcome { all_passed, lines })
}

fn run_scenario(
    sc: &ScenarioSpec,
    config: &Config,
    opts: &RunOptions,
) -> Result<ScenarioOutcome, RunFailure> {
    let started = Instant::now();
    let checks: Vec<CheckKind> = sc
        .checks
        .iter()
        .copied()
        .filter(|c| opts.check_filter.is_none_or(|f| f == *c))
        .collect();
    let grid_n = opts
        .grid_override
        .or(sc.grid)
        .or(config.defaults.grid)
        .unwrap_or(DEFAULT_GRID);
    let seed = opts
        .seed_override
        .or(sc.seed)
        .or(config.defaults.seed)
        .unwrap_or(DEFAULT_SEED);

    let needs_solve = checks.iter().any(|c| c.needs_solve());
    let mut report = ScenarioReport {
        name: sc.name.clone(),
        grid_intervals: grid_n,
        grid_h: 0.0,
        seed,
        c_tol: 0.0,
        space: None,
        family: None,
        corrupted: sc.corrupt,
        solve: None,
        checks: BTreeMap::new(),
        pass: true,
    };
    let mut field_csv = None;
    let mut estimate_csv = None;
    let mut identities_csv = None;
    let mut witnesses_csv = None;
    let mut summary_rows = Vec::new();

    let mut geometry: Option<(ModelSpace, NonlinearityFamily, Arc<RadialGrid>, f64)> = None;
    let mut solved: Option<Result<Field, String>> = None;

    if needs_solve {
        let space = sc.build_space().map_err(|e| RunFailure::Config(e.to_string()))?;
        let family = sc.build_family().map_err(|e| RunFailure::Config(e.to_string()))?;
        if let Some(radius) = sc.params.radius {
            if !(radius > 0.0) || 2.0 * radius > space.r_max() * (1.0 + 1e-12) {
                return Err(RunFailure::Config(format!(
                    "scenario '{}': ball radius {radius} inconsistent with r_max = {}",
                    sc.name,
                    space.r_max()
                )));
            }
        }
        let grid = RadialGrid::new(space.r_max(), grid_n)
            .map_err(|e| RunFailure::Config(e.to_string()))?;
        let c_tol = 10.0 * calibrate_tolerance_constant(&space, &grid);
        report.grid_h = grid.h();
        report.c_tol = c_tol;
        report.space = Some(SpaceSummary::from(&space));
        report.family = Some(family.describe());

        let problem = sc
            .build_problem(&space, &family, &grid, seed)
            .map_err(|e| RunFailure::Config(e.to_string()))?;
        let solver_config = sc.build_solver_config();
        match solve_newton(&problem, &grid, &solver_config) {
            Ok(result) => {
                let u = if sc.corrupt { corrupt_field(&result.u) } else { result.u.clone() };
                report.solve = Some(SolveSummary::Converged {
                    iterations: result.iterations,
                    residual_norm: result.residual_norm,
                    u_min: u.min(),
                    u_max: u.max(),
                });
                let res_field = residual(&problem, &u)
                    .unwrap_or_else(|_| Field::constant(&grid, f64::NAN));
                field_csv = Some(render_field_csv(&u, &res_field));
                solved = Some(Ok(u));
            }
            Err(e) => {
                let msg = e.to_string();
                report.solve = Some(SolveSummary::Failed { error: msg.clone() });
                solved = Some(Err(msg));
            }
        }
        geometry = Some((space, family, grid, c_tol));
    }

    for check in &checks {
        let entry = match check {
            CheckKind::Kernel => run_kernel_check(sc, seed, &mut witnesses_csv),
            _ => {
                let (space, family, _grid, c_tol) =
                    geometry.as_ref().expect("solve-backed check has geometry");
                match solved.as_ref().expect("solve attempted") {
                    Ok(u) => run_field_check(*check, sc, u, family, space, *c_tol),
                    Err(solve_err) => {
                        if *check == CheckKind::Liouville {
                            liouville_without_solution(sc, family, solve_err)
                        } else {
                            CheckReport::Error {
                                message: format!("solver failed: {solve_err}"),
                            }
                        }
                    }
                }
            }
        };
        if let CheckReport::Estimate(est) = &entry {
            summary_rows.push(format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                sc.name,
                check.name(),
                fmt(est.params.mu),
                fmt(est.params.eps),
                fmt(est.params.radius),
                fmt(est.params.k),
                fmt(est.bundle.a_sigma),
                fmt(est.bundle.b_sigma),
                fmt(est.bundle.c_sigma),
                fmt(est.rhs.total),
                fmt(est.max_lhs),
                fmt(est.min_slack),
                est.pass
            ));
            if estimate_csv.is_none() {
                if let (Some(lhs), Ok(u)) = (&est.lhs, solved.as_ref().unwrap()) {
                    estimate_csv = Some(render_estimate_csv(u, lhs, est));
                }
            }
        }
        if *check == CheckKind::Identities {
            if let (Some((space, family, _, _)), Some(Ok(u))) = (&geometry, &solved) {
                let mu = sc.params.mu.unwrap_or(2.0);
                identities_csv = render_identities_csv(u, family, space, mu);
            }
        }
        report.pass &= entry.pass();
        report.checks.insert(check.name(), entry);
    }

    let elapsed = started.elapsed().as_millis();
    let mut lines = Vec::new();
    for check in &checks {
        let entry = &report.checks[check.name()];
        lines.push(format!(
            "[{}] {}/{} {} ({elapsed} ms)",
            if entry.pass() { "pass" } else { "FAIL" },
            sc.name,
            check.name(),
            entry.brief()
        ));
    }
    Ok(ScenarioOutcome {
        report,
        lines,
        witnesses_csv,
        field_csv,
        estimate_csv,
        identities_csv,
        summary_rows,
    })
}

fn render_identities_csv(
    u: &Field,
    family: &NonlinearityFamily,
    space: &ModelSpace,
    mu: f64,
) -> Option<String> {
    let res_h = check_h_equation(u, family, space).ok()?;
    let res_b = check_bochner_identity(&u.map(f64::ln), space, mu, family).ok()?;
    let mut out = String::from("r,h_equation,bochner\n");
    for i in 0..u.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt(u.grid().node(i)),
            fmt(res_h.values()[i]),
            fmt(res_b.values()[i])
        );
    }
    Some(out)
}

fn run_field_check(
    check: CheckKind,
    sc: &ScenarioSpec,
    u: &Field,
    family: &NonlinearityFamily,
    space: &ModelSpace,
    c_tol: f64,
) -> CheckReport {
    let mu = sc.params.mu.unwrap_or(2.0);
    let eps = sc.params.eps.unwrap_or(0.5);
    let result = (|| -> anyhow::Result<CheckReport> {
        match check {
            CheckKind::Local | CheckKind::Harnack => {
                let radius = sc
                    .params
                    .radius
                    .ok_or_else(|| anyhow::anyhow!("check '{}' needs params.radius", check.name()))?;
                let params = if sc.params.optimize {
                    optimize_params(u, family, space, radius)?
                } else {
                    EstimateParams::local(space, mu, eps, radius)?
                };
                if check == CheckKind::Local {
                    Ok(CheckReport::Estimate(check_local_estimate(
                        u, family, space, &params, c_tol,
                    )?))
                } else {
                    let bundle = sup_inf_bundle(u, family, space, &params)?;
                    Ok(CheckReport::Harnack(harnack(
                        u, family, space, &params, &bundle, c_tol,
                    )?))
                }
            }
            CheckKind::Global => {
                let params = EstimateParams::global(space, mu, eps)?;
                Ok(CheckReport::Estimate(check_global_estimate(
                    u, family, space, &params, c_tol,
                )?))
            }
            CheckKind::Liouville => {
                let params = EstimateParams::global(space, mu, eps)?;
                let grad_tol = sc
                    .params
                    .liouville_grad_tol
                    .unwrap_or(DEFAULT_LIOUVILLE_GRAD_TOL);
                Ok(CheckReport::Liouville(check_liouville(
                    u, family, space, &params, grad_tol,
                )?))
            }
            CheckKind::Identities => Ok(CheckReport::Identities(check_identities(
                u, family, space, mu, c_tol,
            )?)),
            CheckKind::Kernel => unreachable!("handled separately"),
        }
    })();
    result.unwrap_or_else(|e| CheckReport::Error { message: e.to_string() })
}

fn liouville_without_solution(
    sc: &ScenarioSpec,
    family: &NonlinearityFamily,
    solve_err: &str,
) -> CheckReport {
    if family.has_no_positive_zeros() != Some(true) {
        return CheckReport::Error {
            message: format!(
                "solver failed ({solve_err}) and Sigma is not certified free of positive zeros"
            ),
        };
    }
    let mu = sc.params.mu.unwrap_or(2.0);
    match liouville_conditions(family, mu, (1e-3, 1e3)) {
        Ok(verdict) => CheckReport::Liouville(LiouvilleReport::nonexistence_consistent(
            verdict,
            solve_err.to_string(),
        )),
        Err(e) => CheckReport::Error { message: e.to_string() },
    }
}

fn run_kernel_check(
    sc: &ScenarioSpec,
    seed: u64,
    witnesses_csv: &mut Option<String>,
) -> CheckReport {
    let outcome = lemma34_monte_carlo(sc.kernel.samples, seed);
    if !outcome.failures.is_empty() {
        let mut csv = String::from("index,a,b,z,c,y,mu,eps,slack,scale\n");
        for w in &outcome.failures {
            let s = &w.sample;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                w.index,
                fmt(s.a),
                fmt(s.b),
                fmt(s.z),
                fmt(s.c),
                fmt(s.y),
                fmt(s.mu),
                fmt(s.eps),
                fmt(w.slack),
                fmt(w.scale)
            );
        }
        *witnesses_csv = Some(csv);
    }

    let cutoff = quintic_cutoff();
    let conditions = verify_cutoff(&cutoff, liyau::inequality_kernel::CUTOFF_GRID);

    let mut coth_min = f64::INFINITY;
    for j in 0..=10_000 {
        let x = 1e-6 * 1e9_f64.powf(j as f64 / 10_000.0);
        coth_min = coth_min.min(coth_bound_check(x).expect("positive x"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut cs_min = f64::INFINITY;
    for _ in 0..sc.kernel.cs_trials {
        let n = rng.gen_range(2..6usize);
        let m = n as f64 + rng.gen_range(0.1..5.0);
        let mat: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let w = rng.gen_range(-5.0..5.0);
        let (s1, s2) = cs_chain_check(n, m, &mat, w).expect("valid trial");
        let scale = 1.0 + mat.iter().map(|v| v * v).sum::<f64>() + w * w;
        cs_min = cs_min.min(s1 / scale).min(s2 / scale);
    }

    let pass = outcome.pass() && conditions.all_pass() && coth_min >= 0.0 && cs_min >= -1e-12;
    CheckReport::Kernel(KernelReport {
        lemma34_samples: outcome.samples,
        lemma34_seed: outcome.seed,
        lemma34_min_normalized_slack: outcome.min_normalized_slack,
        lemma34_failures: outcome.failures.len(),
        cutoff_c1: cutoff.c1,
        cutoff_c2: cutoff.c2,
        cutoff_conditions: conditions,
        coth_min_slack: coth_min,
        cs_trials: sc.kernel.cs_trials,
        cs_min_normalized_slack: cs_min,
        pass,
    })
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

fn render_field_csv(u: &Field, res: &Field) -> String {
    let mut out = String::from("r,u,residual\n");
    for i in 0..u.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt(u.grid().node(i)),
            fmt(u.values()[i]),
            fmt(res.values()[i])
        );
    }
    out
}

fn render_estimate_csv(u: &Field, lhs: &Field, est: &EstimateReport) -> String {
    let mut out = String::from("r,u,lhs,rhs_line,slack\n");
    for i in 0..est.lhs_nodes {
        let l = lhs.values()[i];
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt(u.grid().node(i)),
            fmt(u.values()[i]),
            fmt(l),
            fmt(est.rhs.total),
            fmt(est.rhs.total - l)
        );
    }
    out
}

fn write_scenario_outputs(out_dir: &Path, outcome: &ScenarioOutcome) -> anyhow::Result<()> {
    if outcome.report.checks.is_empty() {
        return Ok(());
    }
    let dir = out_dir.join(sanitize(&outcome.report.name));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let json = serde_json::to_string_pretty(&outcome.report)?;
    fs::write(dir.join("report.json"), json + "\n")
        .with_context(|| format!("writing {}", dir.join("report.json").display()))?;
    if let Some(csv) = &outcome.field_csv {
        fs::write(dir.join("field.csv"), csv)
            .with_context(|| format!("writing {}", dir.join("field.csv").display()))?;
    }
    if let Some(csv) = &outcome.estimate_csv {
        fs::write(dir.join("estimate.csv"), csv)
            .with_context(|| format!("writing {}", dir.join("estimate.csv").display()))?;
    }
    if let Some(csv) = &outcome.identities_csv {
        fs::write(dir.join("identities.csv"), csv)
            .with_context(|| format!("writing {}", dir.join("identities.csv").display()))?;
    }
    if let Some(csv) = &outcome.witnesses_csv {
        fs::write(dir.join("kernel_witnesses.csv"), csv)
            .with_context(|| format!("writing {}", dir.join("kernel_witnesses.csv").display()))?;
    }
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
