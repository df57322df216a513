//! Built-in problems, their starting points and success tests.

use std::sync::Arc;

use bfgsqp::examples::{
    analytic_suite, attack_instances, attack_margin, gen_odl_data, odl_problem, odl_success, suite,
    toy_attack_problem, AttackInstance, OdlData, SuiteEntry,
};
use bfgsqp::problem::{GradientMode, Problem};
use bfgsqp::rng::{restart_seed, seeded, uniform_on_sphere};
use bfgsqp::solver::Solution;
use bfgsqp::{FlatVector, Tensor, VarStruct};

use crate::config::{Gradients, ProblemSelector};
use crate::CliError;

/// `odl_success` tolerance used for reporting.
pub const ODL_TOL: f64 = 1e-2;
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Clone)]
pub enum Judge {
    Odl(Arc<OdlData>),
    Known { f_star: f64 },
    Attack(Arc<AttackInstance>),
}

impl Judge {
    pub fn success(&self, sol: &Solution) -> bool {
        match self {
            Judge::Odl(data) => odl_success(&sol.best_flat, data, ODL_TOL),
            Judge::Known { f_star } => {
                (sol.f - f_star).abs() <= 1e-4 * (1.0 + f_star.abs()) && sol.v_max <= FEASIBILITY_TOL
            }
            Judge::Attack(inst) => sol.v_max <= FEASIBILITY_TOL && attack_margin(inst, &sol.best_flat) > 0.0,
        }
    }
}

/// A problem together with where to start it and how to score the result.
#[derive(Clone)]
pub struct Instance {
    pub name: &'static str,
    pub problem: Problem,
    pub x0: VarStruct,
    pub judge: Judge,
}

fn with_mode(problem: Problem, g: Gradients) -> Result<Problem, CliError> {
    problem.with_mode(g.into()).map_err(|e| CliError::Usage(e.to_string()))
}

fn from_suite(e: SuiteEntry, g: Gradients) -> Result<Instance, CliError> {
    Ok(Instance {
        name: e.name,
        problem: with_mode(e.problem, g)?,
        x0: e.x0,
        judge: Judge::Known { f_star: e.f_star },
    })
}

/// Packs a flat point into the problem's variables.
pub fn unpack(problem: &Problem, x: &FlatVector) -> VarStruct {
    problem.space().unpack(x).expect("dimension matches the space")
}

/// Starting point for restart `index`: uniform on the unit sphere, drawn from
/// the stream seeded with `restart_seed(seed, index)`.
pub fn sphere_start(problem: &Problem, seed: u64, index: u64) -> VarStruct {
    let x = uniform_on_sphere(&mut seeded(restart_seed(seed, index)), problem.n());
    unpack(problem, &x)
}

pub fn odl_data(n: usize, m: usize, theta: f64, seed: u64) -> Result<Arc<OdlData>, CliError> {
    gen_odl_data(n, m, theta, seed).map(Arc::new).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn odl_instance(data: &Arc<OdlData>, g: Gradients, x0: VarStruct) -> Result<Instance, CliError> {
    Ok(Instance { name: "odl", problem: with_mode(odl_problem(data), g)?, x0, judge: Judge::Odl(data.clone()) })
}

pub fn attack_instance(inst: AttackInstance) -> Instance {
    let x0 = VarStruct::from([("x_tilde".to_string(), Tensor::vector(inst.x.as_slice().to_vec()))]);
    Instance { name: "attack", problem: toy_attack_problem(&inst), x0, judge: Judge::Attack(Arc::new(inst)) }
}

/// Instance for `solve` and `gradcheck`. Data are generated from `seed`; ODL
/// starts from restart 0 of the same seed.
pub fn build(selector: &ProblemSelector, seed: u64) -> Result<Instance, CliError> {
    match *selector {
        ProblemSelector::Quadratic { gradients } => from_suite(suite::quadratic(), gradients),
        ProblemSelector::Disk { gradients } => from_suite(suite::disk(), gradients),
        ProblemSelector::L1Fit { gradients } => from_suite(suite::l1_fit(), gradients),
        ProblemSelector::CircleLinear { gradients } => from_suite(suite::circle_linear(), gradients),
        ProblemSelector::Odl { n, m, theta, gradients } => {
            let data = odl_data(n, m, theta, seed)?;
            let x0 = sphere_start(&odl_problem(&data), seed, 0);
            odl_instance(&data, gradients, x0)
        }
        ProblemSelector::Attack { epsilon } => {
            let inst = AttackInstance::seeded(seed, epsilon).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(attack_instance(inst))
        }
    }
}

/// One solve of a benchmark.
#[derive(Clone)]
pub struct Job {
    pub restart: usize,
    pub mode: GradientMode,
    pub seed: u64,
    pub instance: Instance,
}

pub const MODES: [(Gradients, GradientMode); 2] =
    [(Gradients::Analytic, GradientMode::Analytic), (Gradients::Autodiff, GradientMode::Autodiff)];

pub fn odl_jobs(restarts: usize, seed: u64, n: usize, m: usize, theta: f64) -> Result<Vec<Job>, CliError> {
    let data = odl_data(n, m, theta, seed)?;
    let base = odl_problem(&data);
    let mut jobs = Vec::new();
    for r in 0..restarts {
        let x0 = sphere_start(&base, seed, r as u64);
        for (g, mode) in MODES {
            let instance = odl_instance(&data, g, x0.clone())?;
            jobs.push(Job { restart: r, mode, seed: restart_seed(seed, r as u64), instance });
        }
    }
    Ok(jobs)
}

/// Restart 0 uses each problem's fixed starting point, later restarts draw
/// from the unit sphere.
pub fn analytic_jobs(restarts: usize, seed: u64) -> Result<Vec<Job>, CliError> {
    let mut jobs = Vec::new();
    for e in analytic_suite() {
        for r in 0..restarts {
            let x0 = if r == 0 { e.x0.clone() } else { sphere_start(&e.problem, seed, r as u64) };
            for (g, mode) in MODES {
                let mut instance = from_suite(e.clone(), g)?;
                instance.x0 = x0.clone();
                jobs.push(Job { restart: r, mode, seed: restart_seed(seed, r as u64), instance });
            }
        }
    }
    Ok(jobs)
}

/// Attack instances have no analytic gradients, so only the autodiff mode
/// runs. Each restart is a separate oracle-verified instance started at its
/// clean input.
pub fn attack_jobs(restarts: usize, seed: u64, epsilon: f64) -> Vec<Job> {
    attack_instances(restarts, epsilon, seed)
        .into_iter()
        .enumerate()
        .map(|(r, (s, inst))| Job { restart: r, mode: GradientMode::Autodiff, seed: s, instance: attack_instance(inst) })
        .collect()
}
