//! The BFGS-SQP outer loop.
//!
//! Each iteration
//! 1. measures stationarity from nearby penalty gradients and checks termination,
//! 2. computes a steered search direction (possibly lowering `μ`),
//! 3. line-searches the penalty function `φ_μ` to a weak-Wolfe point,
//! 4. updates the inverse-Hessian approximation `W` with the step and the
//!    penalty-gradient difference.

pub mod bfgs;
pub mod linesearch;
pub mod stationarity;
pub mod steering;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::problem::{penalty_gradient, penalty_value, Evaluation, Problem, ProblemError};
use crate::qp::QpSettings;
use crate::varspace::{FlatVector, VarSpaceError, VarStruct};

pub use bfgs::{bfgs_update, BfgsUpdate};
pub use linesearch::{line_search_weak_wolfe, weak_wolfe, LineSearchError, WolfeParams};
pub use stationarity::{stationarity_measure, GradientCache, StationarityResult};
pub use steering::{steering_direction, SteeringParams, SteeringResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    VarSpace(#[from] VarSpaceError),
    #[error("evaluation failed at the starting point: {0}")]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub opt_tol: f64,
    pub viol_ineq_tol: f64,
    pub viol_eq_tol: f64,
    pub mu_init: f64,
    pub mu_shrink: f64,
    pub steering_c_v: f64,
    pub steering_max_rounds: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub linesearch_max_evals: usize,
    /// Defaults to `min(n + 1, 10)` when `None`.
    pub grad_cache_size: Option<usize>,
    pub grad_cache_radius: f64,
    pub curvature_skip_tol: f64,
    /// Carried through for reproducibility records; the solver itself draws
    /// no random numbers.
    pub rng_seed: u64,
    pub qp: QpSettings,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            opt_tol: 1e-8,
            viol_ineq_tol: 1e-6,
            viol_eq_tol: 1e-6,
            mu_init: 1.0,
            mu_shrink: 0.5,
            steering_c_v: 0.1,
            steering_max_rounds: 10,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.5,
            linesearch_max_evals: 50,
            grad_cache_size: None,
            grad_cache_radius: 1e-4,
            curvature_skip_tol: 1e-10,
            rng_seed: 0,
            qp: QpSettings::default(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: &str| Err(SolveError::InvalidOptions(msg.to_string()));
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return bad("need 0 < wolfe_c1 < wolfe_c2 < 1");
        }
        if !(0.0 < self.mu_shrink && self.mu_shrink < 1.0) {
            return bad("need 0 < mu_shrink < 1");
        }
        for (name, v) in [
            ("opt_tol", self.opt_tol),
            ("viol_ineq_tol", self.viol_ineq_tol),
            ("viol_eq_tol", self.viol_eq_tol),
            ("grad_cache_radius", self.grad_cache_radius),
            ("curvature_skip_tol", self.curvature_skip_tol),
            ("mu_init", self.mu_init),
            ("steering_c_v", self.steering_c_v),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolveError::InvalidOptions(format!("{name} must be positive and finite")));
            }
        }
        if self.linesearch_max_evals == 0 {
            return bad("linesearch_max_evals must be at least 1");
        }
        if self.grad_cache_size == Some(0) {
            return bad("grad_cache_size must be at least 1");
        }
        let qp = &self.qp;
        if !(qp.rho > 0.0 && qp.rho.is_finite() && qp.sigma > 0.0 && qp.sigma.is_finite()) {
            return bad("qp.rho and qp.sigma must be positive and finite");
        }
        if !(0.0 < qp.alpha && qp.alpha < 2.0) {
            return bad("need 0 < qp.alpha < 2");
        }
        if !(qp.eps_abs >= 0.0 && qp.eps_rel >= 0.0 && qp.eps_abs + qp.eps_rel > 0.0) {
            return bad("qp tolerances must be nonnegative and not both zero");
        }
        if qp.max_iter == 0 || qp.polish_every == 0 || qp.adaptive_rho_interval == 0 {
            return bad("qp iteration counts must be at least 1");
        }
        if !(qp.adaptive_rho_tolerance >= 1.0) {
            return bad("qp.adaptive_rho_tolerance must be at least 1");
        }
        Ok(())
    }

    pub fn cache_size(&self, n: usize) -> usize {
        self.grad_cache_size.unwrap_or((n + 1).min(10))
    }

    fn wolfe(&self) -> WolfeParams {
        WolfeParams { c1: self.wolfe_c1, c2: self.wolfe_c2, max_evals: self.linesearch_max_evals }
    }

    fn steering(&self) -> SteeringParams {
        SteeringParams { c_v: self.steering_c_v, mu_shrink: self.mu_shrink, max_rounds: self.steering_max_rounds }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationCode {
    Optimal,
    MaxIter,
    LineSearchFailure,
    NonFinite,
}

impl TerminationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationCode::Optimal => "Optimal",
            TerminationCode::MaxIter => "MaxIter",
            TerminationCode::LineSearchFailure => "LineSearchFailure",
            TerminationCode::NonFinite => "NonFinite",
        }
    }
}

impl std::fmt::Display for TerminationCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What the line search saw on the step that produced an iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchRecord {
    pub phi0: f64,
    pub dphi0: f64,
    pub phi: f64,
    pub dphi: f64,
    pub c1: f64,
    pub c2: f64,
}

impl LineSearchRecord {
    pub fn armijo(&self, t: f64) -> bool {
        linesearch::armijo_holds(self.phi0, self.dphi0, t, self.phi, self.c1)
    }

    pub fn weak_wolfe(&self) -> bool {
        linesearch::curvature_holds(self.dphi0, self.dphi, self.c2)
    }
}

/// One row of the iterate log, describing iterate `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub f: f64,
    pub v_total: f64,
    pub v_max: f64,
    /// Penalty parameter in effect when stationarity was measured.
    pub mu: f64,
    pub stationarity: f64,
    /// Step length that produced this iterate (0 for the starting point).
    pub step: f64,
    /// Cumulative function evaluations.
    pub fn_evals: usize,
    pub line_search: Option<LineSearchRecord>,
    pub bfgs_skipped: Option<bool>,
    /// The steering QP failed at the previous iterate and a gradient direction was used.
    pub steering_fallback: bool,
    /// Steering ran out of rounds at the previous iterate.
    pub steering_exhausted: bool,
}

/// Everything a caller may want to inspect after an accepted step.
pub struct StepInfo<'a> {
    pub k: usize,
    /// The accepted iterate `x_k`.
    pub x: &'a DVector<f64>,
    pub w_before: &'a DMatrix<f64>,
    pub w_after: &'a DMatrix<f64>,
    pub s: &'a DVector<f64>,
    pub y: &'a DVector<f64>,
    pub skipped: bool,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub best_x: VarStruct,
    pub best_flat: FlatVector,
    pub f: f64,
    pub v_total: f64,
    pub v_max: f64,
    /// Stationarity at the final iterate.
    pub stationarity: f64,
    pub code: TerminationCode,
    pub iterate_log: Vec<IterateRecord>,
    pub final_x: FlatVector,
    pub final_mu: f64,
    /// Cache the final stationarity value was computed from.
    pub final_cache: GradientCache,
}

impl Solution {
    pub fn iterations(&self) -> usize {
        self.iterate_log.len()
    }
}

/// State carried between iterations.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: FlatVector,
    pub eval: Evaluation,
    pub mu: f64,
    pub w: DMatrix<f64>,
    pub cache: GradientCache,
    pub iter: usize,
    pub fn_evals: usize,
}

/// Outcome of [`check_termination`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Continue,
    Stop(TerminationCode),
}

pub fn check_termination(eval: &Evaluation, stationarity: f64, iter: usize, opts: &SolverOptions) -> Termination {
    if eval.is_feasible_within(opts.viol_ineq_tol, opts.viol_eq_tol) && stationarity <= opts.opt_tol {
        Termination::Stop(TerminationCode::Optimal)
    } else if iter >= opts.max_iter {
        Termination::Stop(TerminationCode::MaxIter)
    } else {
        Termination::Continue
    }
}

pub fn solve(problem: &Problem, opts: &SolverOptions, x0: &VarStruct) -> Result<Solution, SolveError> {
    solve_observed(problem, opts, x0, |_| {})
}

/// [`solve`] with a callback invoked after every accepted step.
pub fn solve_observed(
    problem: &Problem,
    opts: &SolverOptions,
    x0: &VarStruct,
    mut observer: impl FnMut(&StepInfo<'_>),
) -> Result<Solution, SolveError> {
    opts.validate()?;
    let x = problem.space().pack(x0)?;
    let n = x.len();
    let eval = problem.eval_all(&x)?;
    let mu = opts.mu_init;
    let mut cache = GradientCache::new(opts.cache_size(n));
    cache.push(x.clone(), penalty_gradient(mu, &eval));
    let mut state = SolverState { x, eval, mu, w: DMatrix::identity(n, n), cache, iter: 0, fn_evals: 1 };

    let mut best = Best::default();
    let mut log = Vec::new();
    let mut last = LastStep::default();

    let (code, stationarity) = loop {
        best.consider(&state.eval, opts);
        let stat = stationarity_measure(&state.cache, &state.x, opts.grad_cache_radius, &opts.qp);
        log.push(IterateRecord {
            k: state.iter,
            f: state.eval.f,
            v_total: state.eval.v_total,
            v_max: state.eval.v_max,
            mu: state.mu,
            stationarity: stat.value,
            step: last.step,
            fn_evals: state.fn_evals,
            line_search: last.line_search,
            bfgs_skipped: last.bfgs_skipped,
            steering_fallback: last.fallback,
            steering_exhausted: last.exhausted,
        });
        if let Termination::Stop(code) = check_termination(&state.eval, stat.value, state.iter, opts) {
            break (code, stat.value);
        }
        match step(problem, opts, &mut state, &mut observer) {
            Ok(s) => last = s,
            Err(code) => break (code, stat.value),
        }
    };

    let (best_flat, best_eval) = best.take().expect("at least one iterate");
    Ok(Solution {
        best_x: problem.space().unpack(&best_flat)?,
        best_flat,
        f: best_eval.f,
        v_total: best_eval.v_total,
        v_max: best_eval.v_max,
        stationarity,
        code,
        iterate_log: log,
        final_x: state.x,
        final_mu: state.mu,
        final_cache: state.cache,
    })
}

#[derive(Default)]
struct LastStep {
    step: f64,
    line_search: Option<LineSearchRecord>,
    bfgs_skipped: Option<bool>,
    fallback: bool,
    exhausted: bool,
}

fn step(
    problem: &Problem,
    opts: &SolverOptions,
    state: &mut SolverState,
    observer: &mut impl FnMut(&StepInfo<'_>),
) -> Result<LastStep, TerminationCode> {
    let n = state.x.len();
    let h = match state.w.clone().cholesky() {
        Some(c) => c.inverse(),
        None => {
            // W lost definiteness to rounding; start over from the identity.
            state.w = DMatrix::identity(n, n);
            DMatrix::identity(n, n)
        }
    };
    let steer = steering_direction(&state.eval, state.mu, &state.w, &h, &opts.steering(), &opts.qp);
    if steer.mu != state.mu {
        state.mu = steer.mu;
        state.cache.clear();
        state.cache.push(state.x.clone(), penalty_gradient(state.mu, &state.eval));
    }
    let mu = state.mu;
    let grad = penalty_gradient(mu, &state.eval);
    let mut d = steer.d;
    if d.iter().any(|v| !v.is_finite()) {
        return Err(TerminationCode::NonFinite);
    }
    let mut dphi0 = grad.dot(&d);
    if !(dphi0 < 0.0) {
        d = -(&state.w * &grad);
        dphi0 = grad.dot(&d);
    }
    let phi0 = penalty_value(mu, &state.eval);

    let x = state.x.clone();
    let accepted = weak_wolfe(phi0, dphi0, &opts.wolfe(), |t| {
        let xt = &x + &d * t;
        let e = problem.eval_all(&xt).ok()?;
        let g = penalty_gradient(mu, &e);
        Some((penalty_value(mu, &e), g.dot(&d), (e, g)))
    });
    let accepted = match accepted {
        Ok(a) => a,
        Err(LineSearchError::Failure { evals }) => {
            state.fn_evals += evals;
            return Err(TerminationCode::LineSearchFailure);
        }
        Err(LineSearchError::NotDescent(_)) => return Err(TerminationCode::LineSearchFailure),
    };
    state.fn_evals += accepted.evals;
    let (eval_new, grad_new) = accepted.payload;
    let x_new = eval_new.x.clone();
    let s = &x_new - &state.x;
    let y = &grad_new - &grad;
    let update = bfgs_update(&state.w, &s, &y, opts.curvature_skip_tol);
    observer(&StepInfo {
        k: state.iter + 1,
        x: &x_new,
        w_before: &state.w,
        w_after: &update.w,
        s: &s,
        y: &y,
        skipped: update.skipped,
        mu,
    });
    state.w = update.w;
    state.cache.push(x_new.clone(), grad_new);
    state.x = x_new;
    state.eval = eval_new;
    state.iter += 1;
    Ok(LastStep {
        step: accepted.t,
        line_search: Some(LineSearchRecord {
            phi0,
            dphi0,
            phi: accepted.phi,
            dphi: accepted.dphi,
            c1: opts.wolfe_c1,
            c2: opts.wolfe_c2,
        }),
        bfgs_skipped: Some(update.skipped),
        fallback: steer.fallback,
        exhausted: steer.exhausted,
    })
}

/// Feasibility-first best-iterate tracking.
#[derive(Default)]
struct Best {
    current: Option<(FlatVector, Evaluation, bool)>,
}

impl Best {
    fn consider(&mut self, eval: &Evaluation, opts: &SolverOptions) {
        let feasible = eval.is_feasible_within(opts.viol_ineq_tol, opts.viol_eq_tol);
        let better = match &self.current {
            None => true,
            Some((_, b, b_feasible)) => match (feasible, *b_feasible) {
                (true, false) => true,
                (true, true) => eval.f < b.f,
                (false, false) => eval.v_max < b.v_max,
                (false, true) => false,
            },
        };
        if better {
            self.current = Some((eval.x.clone(), eval.clone(), feasible));
        }
    }

    fn take(self) -> Option<(FlatVector, Evaluation)> {
        self.current.map(|(x, e, _)| (x, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{program_fn, ProgramOutput};
    use crate::tensor::Tensor;
    use crate::varspace::VarSpace;

    fn x0(name: &str, v: Vec<f64>) -> VarStruct {
        VarStruct::from([(name.to_string(), Tensor::vector(v))])
    }

    #[test]
    fn one_dimensional_quadratic() {
        let space = VarSpace::new([("x", vec![1])]).unwrap();
        let p = Problem::new(space, program_fn(|v| ProgramOutput::objective(v.get("x").shift(-2.0).norm2_sq())), 0, 0);
        let sol = solve(&p, &SolverOptions::default(), &x0("x", vec![0.0])).unwrap();
        assert_eq!(sol.code, TerminationCode::Optimal);
        assert!(sol.f <= 1e-12);
        assert!((sol.best_x["x"].data()[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn projection_onto_disk() {
        let space = VarSpace::new([("x", vec![2])]).unwrap();
        let p = Problem::new(
            space,
            program_fn(|v| {
                let x = v.get("x");
                let target = v.tape().constant(Tensor::vector(vec![2.0, 2.0]));
                ProgramOutput { f: (x - target).norm2_sq(), ci: vec![x.norm2_sq() - 1.0], ce: vec![] }
            }),
            1,
            0,
        );
        let sol = solve(&p, &SolverOptions::default(), &x0("x", vec![0.1, 0.0])).unwrap();
        let h = 0.5f64.sqrt();
        let x = sol.best_x["x"].data();
        assert!((x[0] - h).abs() < 1e-4 && (x[1] - h).abs() < 1e-4, "{x:?} {:?}", sol.code);
        let f_star = (2.0 * 2f64.sqrt() - 1.0).powi(2);
        assert!((sol.f - f_star).abs() < 1e-4 * (1.0 + f_star));
        assert!(sol.v_max <= 1e-6);
    }

    #[test]
    fn termination_rules() {
        let e = Evaluation::assemble(
            FlatVector::zeros(1),
            0.0,
            FlatVector::zeros(1),
            vec![],
            &[],
            vec![1e-3],
            &[FlatVector::zeros(1)],
        );
        let opts = SolverOptions::default();
        assert_eq!(check_termination(&e, 1e-9, 0, &opts), Termination::Continue);
        let mut feasible = e.clone();
        feasible.ce = vec![0.0];
        assert_eq!(check_termination(&feasible, 1e-9, 0, &opts), Termination::Stop(TerminationCode::Optimal));
        assert_eq!(check_termination(&e, 1.0, 1000, &opts), Termination::Stop(TerminationCode::MaxIter));
    }

    #[test]
    fn invalid_options_rejected() {
        let bad = SolverOptions { wolfe_c1: 0.6, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SolverOptions { mu_shrink: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(SolverOptions::default().validate().is_ok());
    }
}
