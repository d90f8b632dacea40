//! Drives one experiment end to end: build the problem, solve the reference,
//! run every seed (in parallel worker slots), write one trace per seed plus a
//! JSON summary, and evaluate any enabled runtime checks.

use std::fmt;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use dfsdca::diagnostics::{
    base_potentials, check_self_bound, evolution_check, expected_next_potential, fit_log_decay,
    lyapunov_at, snapshot, Lyapunov,
};
use dfsdca::problems::{solve_reference, ReferenceMethod, ReferenceSolution};
use dfsdca::sgd::{SgdState, StepSchedule};
use dfsdca::{ConvexityClass, DenseVector, HyperParams, Problem, SolverState};

use crate::config::{ChecksConfig, ExperimentConfig, ScheduleConfig, SolverKind};
use crate::trace::{mean_rows, write_trace, TraceRow};

/// Tolerance for the exact-contraction check, relative above potential one.
pub const CONTRACTION_TOL: f64 = 1e-12;
/// Tolerance for the per-step evolution identities.
pub const EVOLUTION_TOL: f64 = 1e-10;
/// Slack for the self-bound inequality.
pub const SELF_BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_override: Option<PathBuf>,
    pub seed_override: Option<Vec<u64>>,
    pub quiet: bool,
}

/// A failed runtime check: which inequality broke, where, and both sides.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckViolation {
    pub seed: u64,
    pub iteration: u64,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for CheckViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seed {}, iteration {}: {} violated: lhs = {:e}, rhs = {:e}",
            self.seed, self.iteration, self.check, self.lhs, self.rhs
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayRates {
    pub dual_err: Option<f64>,
    pub primal_err: Option<f64>,
    pub lyapunov_avg: Option<f64>,
    pub lyapunov_each: Option<f64>,
    pub suboptimality: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub solver: String,
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
    pub smoothness: f64,
    pub convexity: String,
    pub eta: f64,
    pub beta: Option<f64>,
    pub steps: u64,
    pub snapshot_every: u64,
    pub seeds: Vec<u64>,
    pub reference_method: String,
    pub reference_residual: f64,
    pub p_star: f64,
    /// Fitted per-iteration log decay of each column of the seed-mean trace.
    pub decay_rates: DecayRates,
    /// Per-t mean of every column across seeds (the object the rate bounds
    /// speak about).
    pub mean_trace: Vec<TraceRow>,
    pub violations: Vec<CheckViolation>,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub out_dir: PathBuf,
    pub trace_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub summary: Summary,
}

impl ExperimentOutcome {
    pub fn checks_passed(&self) -> bool {
        self.summary.violations.is_empty()
    }
}

struct SeedRun {
    seed: u64,
    rows: Vec<TraceRow>,
    violations: Vec<CheckViolation>,
}

pub fn run_experiment(
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> anyhow::Result<ExperimentOutcome> {
    let seeds = opts
        .seed_override
        .clone()
        .unwrap_or_else(|| config.solver.seeds.clone());
    if seeds.is_empty() {
        bail!("seed override lists no seeds");
    }
    let out_dir = opts
        .out_override
        .clone()
        .unwrap_or_else(|| config.output.dir.clone());

    let problem = config.build_problem()?;
    let warm_start = match &config.solver.warm_start_w0 {
        Some(w0) => {
            if w0.len() != problem.dim() {
                bail!(
                    "warm_start_w0 has dimension {}, problem has {}",
                    w0.len(),
                    problem.dim()
                );
            }
            Some(DenseVector::from_vec(w0.clone()))
        }
        None => None,
    };
    if config.checks.self_bound && problem.convexity() != ConvexityClass::EachConvex {
        bail!("checks.self_bound needs every component convex; this problem is only convex on average");
    }
    let reference = solve_reference(&problem)?;
    let eta = config.resolve_eta(&problem)?;

    let run_seed = |seed: u64| -> anyhow::Result<SeedRun> {
        match config.solver.kind {
            SolverKind::Sdca => {
                let hp = HyperParams::for_problem(&problem, eta)?;
                run_sdca_seed(
                    seed,
                    &problem,
                    &reference,
                    &hp,
                    config.solver.steps,
                    config.solver.snapshot_every,
                    warm_start.as_ref(),
                    &config.checks,
                )
            }
            SolverKind::Sgd => {
                let schedule = match config.solver.schedule {
                    ScheduleConfig::Constant => StepSchedule::Constant(eta),
                    ScheduleConfig::Decaying => StepSchedule::Decaying(eta),
                };
                run_sgd_seed(
                    seed,
                    &problem,
                    &reference,
                    &schedule,
                    config.solver.steps,
                    config.solver.snapshot_every,
                    warm_start.as_ref(),
                    &config.checks,
                )
            }
        }
    };

    let results: Vec<SeedRun> = match config.solver.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .context("building the worker pool")?
            .install(|| seeds.par_iter().map(|&s| run_seed(s)).collect::<anyhow::Result<_>>())?,
        None => seeds
            .par_iter()
            .map(|&s| run_seed(s))
            .collect::<anyhow::Result<_>>()?,
    };

    fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let mut trace_paths = Vec::with_capacity(results.len());
    for run in &results {
        let path = out_dir.join(format!("trace_seed{}.csv", run.seed));
        write_trace(&path, &run.rows)?;
        trace_paths.push(path);
    }

    let mean_trace = mean_rows(
        &results
            .iter()
            .map(|r| r.rows.clone())
            .collect::<Vec<_>>(),
    )?;
    let decay_rates = decay_rates_from_rows(&mean_trace);
    let violations: Vec<CheckViolation> = results
        .iter()
        .flat_map(|r| r.violations.iter().cloned())
        .collect();

    let summary = Summary {
        solver: match config.solver.kind {
            SolverKind::Sdca => "sdca".into(),
            SolverKind::Sgd => "sgd".into(),
        },
        n: problem.n(),
        d: problem.dim(),
        lambda: problem.lambda(),
        smoothness: problem.smoothness(),
        convexity: match problem.convexity() {
            ConvexityClass::EachConvex => "each_convex".into(),
            ConvexityClass::AverageConvex => "average_convex".into(),
        },
        eta,
        beta: match config.solver.kind {
            SolverKind::Sdca => Some(eta * problem.lambda() * problem.n() as f64),
            SolverKind::Sgd => None,
        },
        steps: config.solver.steps,
        snapshot_every: config.solver.snapshot_every,
        seeds: seeds.clone(),
        reference_method: match reference.method {
            ReferenceMethod::ClosedForm => "closed_form".into(),
            ReferenceMethod::FullGradientDescent => "full_gradient_descent".into(),
        },
        reference_residual: reference.residual,
        p_star: reference.p_star,
        decay_rates,
        mean_trace,
        violations,
    };

    let summary_path = out_dir.join("summary.json");
    let mut rendered = serde_json::to_string_pretty(&summary).context("rendering summary")?;
    rendered.push('\n');
    fs::write(&summary_path, rendered)
        .with_context(|| format!("cannot write {}", summary_path.display()))?;

    if !opts.quiet {
        report(&summary, &trace_paths, &summary_path);
    }

    Ok(ExperimentOutcome {
        out_dir,
        trace_paths,
        summary_path,
        summary,
    })
}

/// Fits every column of the (seed-mean) trace that is present throughout.
pub fn decay_rates_from_rows(rows: &[TraceRow]) -> DecayRates {
    let fit_opt = |f: &dyn Fn(&TraceRow) -> Option<f64>| {
        let points: Option<Vec<(u64, f64)>> = rows.iter().map(|r| f(r).map(|v| (r.t, v))).collect();
        points.and_then(|p| fit_log_decay(&p).ok())
    };
    let fit = |f: &dyn Fn(&TraceRow) -> f64| {
        let points: Vec<(u64, f64)> = rows.iter().map(|r| (r.t, f(r))).collect();
        fit_log_decay(&points).ok()
    };
    DecayRates {
        dual_err: fit_opt(&|r| r.dual_err),
        primal_err: fit(&|r| r.primal_err),
        lyapunov_avg: fit_opt(&|r| r.lyapunov_avg),
        lyapunov_each: fit_opt(&|r| r.lyapunov_each),
        suboptimality: fit(&|r| r.suboptimality),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_sdca_seed(
    seed: u64,
    problem: &Problem,
    reference: &ReferenceSolution,
    hp: &HyperParams,
    steps: u64,
    snapshot_every: u64,
    warm_start: Option<&DenseVector>,
    checks: &ChecksConfig,
) -> anyhow::Result<SeedRun> {
    let which = match problem.convexity() {
        ConvexityClass::EachConvex => Lyapunov::EachConvex,
        ConvexityClass::AverageConvex => Lyapunov::AverageConvex,
    };
    let mut state = match warm_start {
        Some(w0) => SolverState::init_warm(problem, w0, seed)?,
        None => SolverState::init_zero(problem, seed)?,
    };
    let mut violations = Vec::new();
    let mut rows = vec![TraceRow::from(&snapshot(&state, problem, reference, None))];
    snapshot_checks(seed, &state, problem, reference, hp, which, checks, &mut violations)?;

    for t in 1..=steps {
        let before = if checks.evolution {
            Some((state.clone(), base_potentials(&state, reference)))
        } else {
            None
        };
        let report = state.step(problem, hp)?;
        if let Some((before_state, (dual_prev, primal_prev))) = before {
            let check = evolution_check(&before_state, &state, &report, problem, reference, hp);
            let dual_err =
                (check.dual_delta - check.dual_delta_predicted).abs() / dual_prev.max(1.0);
            if dual_err > EVOLUTION_TOL {
                violations.push(CheckViolation {
                    seed,
                    iteration: t,
                    check: "evolution identity (dual potential delta vs closed form)".into(),
                    lhs: check.dual_delta,
                    rhs: check.dual_delta_predicted,
                });
            }
            let primal_err =
                (check.primal_delta - check.primal_delta_predicted).abs() / primal_prev.max(1.0);
            if primal_err > EVOLUTION_TOL {
                violations.push(CheckViolation {
                    seed,
                    iteration: t,
                    check: "evolution identity (primal potential delta vs closed form)".into(),
                    lhs: check.primal_delta,
                    rhs: check.primal_delta_predicted,
                });
            }
        }
        if t % snapshot_every == 0 || t == steps {
            rows.push(TraceRow::from(&snapshot(
                &state,
                problem,
                reference,
                Some(&report),
            )));
            snapshot_checks(seed, &state, problem, reference, hp, which, checks, &mut violations)?;
        }
    }
    Ok(SeedRun {
        seed,
        rows,
        violations,
    })
}

#[allow(clippy::too_many_arguments)]
fn snapshot_checks(
    seed: u64,
    state: &SolverState,
    problem: &Problem,
    reference: &ReferenceSolution,
    hp: &HyperParams,
    which: Lyapunov,
    checks: &ChecksConfig,
    violations: &mut Vec<CheckViolation>,
) -> anyhow::Result<()> {
    if checks.contraction {
        let current = lyapunov_at(state, problem, reference, which);
        let expected = expected_next_potential(state, problem, reference, hp, which)?;
        let bound = (1.0 - hp.eta() * hp.lambda()) * current + CONTRACTION_TOL * current.max(1.0);
        if expected > bound {
            violations.push(CheckViolation {
                seed,
                iteration: state.iteration(),
                check: "exact contraction (E[next potential] <= (1 - eta lambda) current + tol)"
                    .into(),
                lhs: expected,
                rhs: bound,
            });
        }
    }
    if checks.self_bound {
        let (lhs, rhs) = check_self_bound(problem, reference, state.w())?;
        if lhs > rhs + SELF_BOUND_TOL {
            violations.push(CheckViolation {
                seed,
                iteration: state.iteration(),
                check: "self-bound (mean squared gradient gap <= 2 L centered suboptimality)"
                    .into(),
                lhs,
                rhs,
            });
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_sgd_seed(
    seed: u64,
    problem: &Problem,
    reference: &ReferenceSolution,
    schedule: &StepSchedule,
    steps: u64,
    snapshot_every: u64,
    warm_start: Option<&DenseVector>,
    checks: &ChecksConfig,
) -> anyhow::Result<SeedRun> {
    let mut state = match warm_start {
        Some(w0) => SgdState::init(problem, w0.clone(), seed)?,
        None => SgdState::init_zero(problem, seed)?,
    };
    let mut violations = Vec::new();
    let sgd_row = |state: &SgdState, v_norm_sq: Option<f64>| TraceRow {
        t: state.iteration(),
        dual_err: None,
        primal_err: state.w().dist_sq(&reference.w_star),
        lyapunov_avg: None,
        lyapunov_each: None,
        suboptimality: problem.objective(state.w()) - reference.p_star,
        v_norm_sq,
    };
    let self_bound = |state: &SgdState, violations: &mut Vec<CheckViolation>| -> anyhow::Result<()> {
        if checks.self_bound {
            let (lhs, rhs) = check_self_bound(problem, reference, state.w())?;
            if lhs > rhs + SELF_BOUND_TOL {
                violations.push(CheckViolation {
                    seed,
                    iteration: state.iteration(),
                    check: "self-bound (mean squared gradient gap <= 2 L centered suboptimality)"
                        .into(),
                    lhs,
                    rhs,
                });
            }
        }
        Ok(())
    };
    let mut rows = vec![sgd_row(&state, None)];
    self_bound(&state, &mut violations)?;
    for t in 1..=steps {
        let report = state.step(problem, schedule)?;
        if t % snapshot_every == 0 || t == steps {
            rows.push(sgd_row(&state, Some(report.direction_norm_sq)));
            self_bound(&state, &mut violations)?;
        }
    }
    Ok(SeedRun {
        seed,
        rows,
        violations,
    })
}

fn report(summary: &Summary, trace_paths: &[PathBuf], summary_path: &std::path::Path) {
    println!(
        "problem: n = {}, d = {}, lambda = {}, L = {:.6e}, {}",
        summary.n, summary.d, summary.lambda, summary.smoothness, summary.convexity
    );
    match summary.beta {
        Some(beta) => println!(
            "solver: {} with eta = {:.6e} (beta = {:.6e}), {} steps, {} seed(s)",
            summary.solver,
            summary.eta,
            beta,
            summary.steps,
            summary.seeds.len()
        ),
        None => println!(
            "solver: {} with eta0 = {:.6e}, {} steps, {} seed(s)",
            summary.solver,
            summary.eta,
            summary.steps,
            summary.seeds.len()
        ),
    }
    println!(
        "reference: {} (residual {:.3e}), P* = {:.12e}",
        summary.reference_method, summary.reference_residual, summary.p_star
    );
    if let Some(last) = summary.mean_trace.last() {
        println!(
            "mean final: primal_err = {:.6e}, suboptimality = {:.6e}",
            last.primal_err, last.suboptimality
        );
    }
    let rate = summary
        .decay_rates
        .lyapunov_each
        .or(summary.decay_rates.lyapunov_avg)
        .or(summary.decay_rates.primal_err);
    if let Some(rate) = rate {
        println!("fitted log-decay: {rate:.6e} per iteration");
    }
    if summary.violations.is_empty() {
        println!("checks: all enabled checks passed");
    } else {
        for v in &summary.violations {
            println!("check FAILED: {v}");
        }
    }
    for path in trace_paths {
        println!("trace: {}", path.display());
    }
    println!("summary: {}", summary_path.display());
}
