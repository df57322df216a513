//! Command implementations behind the `bfgsqp` binary.

pub mod builtin;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use bfgsqp::gradient_errors;
use bfgsqp::rng::{gaussian_vector, restart_seed, seeded};
use bfgsqp::solver::{solve, Solution, SolverOptions, TerminationCode};
use rayon::prelude::*;
use thiserror::Error;

use builtin::{Instance, Job};
use output::{mode_name, BenchRow};

pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }
}

pub fn exit_code(code: TerminationCode) -> i32 {
    match code {
        TerminationCode::Optimal => 0,
        TerminationCode::MaxIter => 2,
        TerminationCode::LineSearchFailure => 3,
        TerminationCode::NonFinite => 1,
    }
}

fn run(instance: &Instance, opts: &SolverOptions) -> Result<Solution, CliError> {
    solve(&instance.problem, opts, &instance.x0).map_err(|e| CliError::Failed(format!("{}: {e}", instance.name)))
}

/// Solves a configured problem, writing `iterates.csv` and `solution.json`
/// under `out`. Returns the process exit code.
pub fn cmd_solve(config: &Path, out: &Path, seed: Option<u64>) -> Result<i32, CliError> {
    let cfg = config::load(config)?;
    let seed = seed.unwrap_or(cfg.seed);
    let opts = cfg.options.apply(SolverOptions { rng_seed: seed, ..Default::default() })?;
    let instance = builtin::build(&cfg.problem, seed)?;
    let start = Instant::now();
    let sol = run(&instance, &opts)?;
    let wall = start.elapsed().as_secs_f64();
    output::write(&out.join("iterates.csv"), &output::iterates_csv(&sol))?;
    output::write(&out.join("solution.json"), &output::solution_json(&sol, wall))?;
    println!(
        "{}: {} after {} iterations, f = {}, v_max = {}",
        instance.name,
        sol.code,
        sol.iterations(),
        output::num(sol.f),
        output::num(sol.v_max)
    );
    Ok(exit_code(sol.code))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Odl,
    Analytic,
    Attack,
}

impl Suite {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "odl" => Ok(Suite::Odl),
            "analytic" => Ok(Suite::Analytic),
            "attack" => Ok(Suite::Attack),
            _ => Err(CliError::Usage(format!("unknown suite `{name}` (expected odl, analytic or attack)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchArgs {
    pub suite: Suite,
    pub restarts: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub theta: f64,
    pub out: PathBuf,
}

/// Options used by the attack suite: a smaller starting penalty weight keeps
/// the penalty bounded below along the first steps.
pub fn attack_options() -> SolverOptions {
    SolverOptions { mu_init: 0.1, ..Default::default() }
}

/// Runs every job of a suite (concurrently), then writes `bench.csv` and one
/// iterate log per job under `iterates/`. Rows keep job order.
pub fn cmd_bench(args: &BenchArgs) -> Result<Vec<BenchRow>, CliError> {
    if args.restarts == 0 {
        return Err(CliError::Usage("--restarts must be at least 1".into()));
    }
    let (jobs, opts) = match args.suite {
        Suite::Odl => (builtin::odl_jobs(args.restarts, args.seed, args.n, args.m, args.theta)?, SolverOptions::default()),
        Suite::Analytic => (builtin::analytic_jobs(args.restarts, args.seed)?, SolverOptions::default()),
        Suite::Attack => (builtin::attack_jobs(args.restarts, args.seed, 0.5), attack_options()),
    };
    let opts = SolverOptions { rng_seed: args.seed, ..opts };
    let results: Vec<(Job, Solution)> = jobs
        .into_par_iter()
        .map(|job| run(&job.instance, &opts).map(|sol| (job, sol)))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(results.len());
    for (job, sol) in &results {
        let name = format!("{}_{:03}_{}.csv", job.instance.name, job.restart, mode_name(job.mode));
        output::write(&args.out.join("iterates").join(name), &output::iterates_csv(sol))?;
        rows.push(BenchRow {
            restart: job.restart,
            mode: job.mode,
            problem: job.instance.name,
            seed: job.seed,
            f: sol.f,
            v_max: sol.v_max,
            stationarity: sol.stationarity,
            code: sol.code.as_str(),
            iterations: sol.iterations(),
            success: job.instance.judge.success(sol),
        });
    }
    output::write(&args.out.join("bench.csv"), &output::bench_csv(&rows))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    /// Output label and its largest relative error over all trials.
    pub outputs: Vec<(String, f64)>,
    pub max: f64,
}

/// Compares autodiff gradients with central differences at `trials` points
/// `x0 + g`, `g` standard Gaussian drawn from `restart_seed(seed, trial)`.
pub fn cmd_gradcheck(problem: &str, trials: usize, h: f64, seed: u64) -> Result<GradcheckReport, CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(CliError::Usage("--h must be positive".into()));
    }
    let instance = builtin::build(&config::ProblemSelector::by_name(problem)?, seed)?;
    let p = &instance.problem;
    let base = p.space().pack(&instance.x0).expect("x0 matches the space");
    let mut labels = vec!["f".to_string()];
    labels.extend((0..p.n_ineq()).map(|i| format!("ci[{i}]")));
    labels.extend((0..p.n_eq()).map(|i| format!("ce[{i}]")));
    let mut worst = vec![0.0f64; labels.len()];
    for t in 0..trials {
        let x = &base + gaussian_vector(&mut seeded(restart_seed(seed, t as u64)), p.n());
        let errs = gradient_errors(p.program(), p.space(), &x, h)
            .map_err(|e| CliError::Failed(format!("evaluation failed: {e}")))?;
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    Ok(GradcheckReport { outputs: labels.into_iter().zip(worst).collect(), max })
}

pub const GRADCHECK_TOL: f64 = 1e-5;
