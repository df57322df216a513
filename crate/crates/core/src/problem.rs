//! Objective, constraints, and the exact penalty function the solver
//! line-searches.
//!
//! A problem is `min f(x)` subject to `cᵢ(x) ≤ 0` for the inequality set and
//! `cⱼ(x) = 0` for the equality set. The penalty function is
//! `φ_μ(x) = μ·f(x) + v(x)` with the L1 violation
//! `v(x) = Σ max(0, cᵢ(x)) + Σ |cⱼ(x)|`.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::autodiff::{evaluate_and_record, AdError, TensorProgram};
use crate::tensor::sign;
use crate::varspace::{FlatVector, VarSpace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Ad(#[from] AdError),
    #[error("program returned {found} {kind} constraints, expected {expected}")]
    CountMismatch { kind: &'static str, expected: usize, found: usize },
    #[error("problem has no analytic gradients")]
    NoAnalyticGradients,
    #[error("non-finite value in analytic evaluation")]
    NonFinite,
}

impl ProblemError {
    pub fn is_non_finite(&self) -> bool {
        matches!(self, ProblemError::NonFinite | ProblemError::Ad(AdError::NonFiniteValue { .. }))
    }
}

/// Values and hand-derived gradients, for problems that provide them.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticOutput {
    pub f: f64,
    pub grad_f: FlatVector,
    pub ci: Vec<f64>,
    pub grad_ci: Vec<FlatVector>,
    pub ce: Vec<f64>,
    pub grad_ce: Vec<FlatVector>,
}

/// A user-supplied routine returning values with analytic gradients.
pub trait AnalyticProgram: Send + Sync {
    fn eval(&self, x: &FlatVector) -> AnalyticOutput;
}

impl<F> AnalyticProgram for F
where
    F: Fn(&FlatVector) -> AnalyticOutput + Send + Sync,
{
    fn eval(&self, x: &FlatVector) -> AnalyticOutput {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientMode {
    #[default]
    Autodiff,
    Analytic,
}

#[derive(Clone)]
pub struct Problem {
    space: VarSpace,
    program: Arc<dyn TensorProgram>,
    n_ineq: usize,
    n_eq: usize,
    analytic: Option<Arc<dyn AnalyticProgram>>,
    mode: GradientMode,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("space", &self.space)
            .field("n_ineq", &self.n_ineq)
            .field("n_eq", &self.n_eq)
            .field("has_analytic", &self.analytic.is_some())
            .field("mode", &self.mode)
            .finish()
    }
}

impl Problem {
    pub fn new(
        space: VarSpace,
        program: impl TensorProgram + 'static,
        n_ineq: usize,
        n_eq: usize,
    ) -> Self {
        Self { space, program: Arc::new(program), n_ineq, n_eq, analytic: None, mode: GradientMode::Autodiff }
    }

    pub fn with_analytic(mut self, analytic: impl AnalyticProgram + 'static) -> Self {
        self.analytic = Some(Arc::new(analytic));
        self
    }

    /// Selects which gradient source [`Problem::eval_all`] uses.
    pub fn with_mode(mut self, mode: GradientMode) -> Result<Self, ProblemError> {
        if mode == GradientMode::Analytic && self.analytic.is_none() {
            return Err(ProblemError::NoAnalyticGradients);
        }
        self.mode = mode;
        Ok(self)
    }

    pub fn space(&self) -> &VarSpace {
        &self.space
    }

    pub fn program(&self) -> &dyn TensorProgram {
        self.program.as_ref()
    }

    pub fn n(&self) -> usize {
        self.space.total_dim()
    }

    pub fn n_ineq(&self) -> usize {
        self.n_ineq
    }

    pub fn n_eq(&self) -> usize {
        self.n_eq
    }

    pub fn mode(&self) -> GradientMode {
        self.mode
    }

    pub fn has_analytic(&self) -> bool {
        self.analytic.is_some()
    }

    /// Evaluates the objective, constraints and all gradients at `x`.
    pub fn eval_all(&self, x: &FlatVector) -> Result<Evaluation, ProblemError> {
        match self.mode {
            GradientMode::Autodiff => self.eval_autodiff(x),
            GradientMode::Analytic => self.eval_analytic(x),
        }
    }

    pub fn eval_autodiff(&self, x: &FlatVector) -> Result<Evaluation, ProblemError> {
        let rec = evaluate_and_record(self.program.as_ref(), &self.space, x)?;
        self.check_counts(rec.ci.len(), rec.ce.len())?;
        let grad_f = rec.tape.backward(rec.f)?;
        let grad_ci = rec.ci.iter().map(|&id| rec.tape.backward(id)).collect::<Result<Vec<_>, _>>()?;
        let grad_ce = rec.ce.iter().map(|&id| rec.tape.backward(id)).collect::<Result<Vec<_>, _>>()?;
        Ok(Evaluation::assemble(x.clone(), rec.values.f, grad_f, rec.values.ci, &grad_ci, rec.values.ce, &grad_ce))
    }

    pub fn eval_analytic(&self, x: &FlatVector) -> Result<Evaluation, ProblemError> {
        let analytic = self.analytic.as_ref().ok_or(ProblemError::NoAnalyticGradients)?;
        if x.len() != self.n() {
            return Err(AdError::from(crate::varspace::VarSpaceError::LengthMismatch {
                expected: self.n(),
                found: x.len(),
            })
            .into());
        }
        let out = analytic.eval(x);
        self.check_counts(out.ci.len(), out.ce.len())?;
        let finite = out.f.is_finite()
            && out.grad_f.iter().all(|v| v.is_finite())
            && out.ci.iter().chain(&out.ce).all(|v| v.is_finite())
            && out.grad_ci.iter().chain(&out.grad_ce).all(|g| g.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(ProblemError::NonFinite);
        }
        Ok(Evaluation::assemble(x.clone(), out.f, out.grad_f, out.ci, &out.grad_ci, out.ce, &out.grad_ce))
    }

    fn check_counts(&self, ci: usize, ce: usize) -> Result<(), ProblemError> {
        if ci != self.n_ineq {
            return Err(ProblemError::CountMismatch { kind: "inequality", expected: self.n_ineq, found: ci });
        }
        if ce != self.n_eq {
            return Err(ProblemError::CountMismatch { kind: "equality", expected: self.n_eq, found: ce });
        }
        Ok(())
    }
}

/// Everything the solver needs to know about one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub x: FlatVector,
    pub f: f64,
    pub grad_f: FlatVector,
    pub ci: Vec<f64>,
    /// `n × n_ineq`, one gradient per column.
    pub grad_ci: DMatrix<f64>,
    pub ce: Vec<f64>,
    /// `n × n_eq`, one gradient per column.
    pub grad_ce: DMatrix<f64>,
    pub v_total: f64,
    pub v_max: f64,
}

impl Evaluation {
    pub fn assemble(
        x: FlatVector,
        f: f64,
        grad_f: FlatVector,
        ci: Vec<f64>,
        grad_ci: &[FlatVector],
        ce: Vec<f64>,
        grad_ce: &[FlatVector],
    ) -> Self {
        let n = x.len();
        let grad_ci = DMatrix::from_fn(n, grad_ci.len(), |i, j| grad_ci[j][i]);
        let grad_ce = DMatrix::from_fn(n, grad_ce.len(), |i, j| grad_ce[j][i]);
        let (v_total, v_max) = violation(&ci, &ce);
        Self { x, f, grad_f, ci, grad_ci, ce, grad_ce, v_total, v_max }
    }

    /// Largest inequality violation `max(0, cᵢ)`.
    pub fn ineq_violation(&self) -> f64 {
        self.ci.iter().fold(0.0, |m, &c| m.max(c.max(0.0)))
    }

    /// Largest equality violation `|cⱼ|`.
    pub fn eq_violation(&self) -> f64 {
        self.ce.iter().fold(0.0, |m, &c| m.max(c.abs()))
    }

    pub fn is_feasible_within(&self, ineq_tol: f64, eq_tol: f64) -> bool {
        self.ineq_violation() <= ineq_tol && self.eq_violation() <= eq_tol
    }
}

/// `(Σ max(0, cᵢ) + Σ |cⱼ|, max of the same terms and 0)`.
pub fn violation(ci: &[f64], ce: &[f64]) -> (f64, f64) {
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for v in ci.iter().map(|c| c.max(0.0)).chain(ce.iter().map(|c| c.abs())) {
        total += v;
        worst = worst.max(v);
    }
    (total, worst)
}

/// `φ_μ = μ·f + v_total`.
pub fn penalty_value(mu: f64, eval: &Evaluation) -> f64 {
    mu * eval.f + eval.v_total
}

/// Subgradient of `φ_μ`: `μ∇f + Σ_{cᵢ>0} ∇cᵢ + Σ sign(cⱼ)∇cⱼ`, with
/// `sign(0) = 0` and active-but-zero inequalities contributing nothing.
pub fn penalty_gradient(mu: f64, eval: &Evaluation) -> FlatVector {
    let mut g = &eval.grad_f * mu;
    for (j, &c) in eval.ci.iter().enumerate() {
        if c > 0.0 {
            g += eval.grad_ci.column(j);
        }
    }
    for (j, &c) in eval.ce.iter().enumerate() {
        let s = sign(c);
        if s != 0.0 {
            g += eval.grad_ce.column(j) * s;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{program_fn, ProgramOutput};
    use crate::tensor::Tensor;

    fn bare(ci: Vec<f64>, ce: Vec<f64>) -> Evaluation {
        let nci = ci.len();
        let nce = ce.len();
        Evaluation::assemble(
            FlatVector::zeros(2),
            2.0,
            FlatVector::zeros(2),
            ci,
            &vec![FlatVector::zeros(2); nci],
            ce,
            &vec![FlatVector::zeros(2); nce],
        )
    }

    fn odl_identity() -> Problem {
        let space = VarSpace::new([("q", vec![2, 1])]).unwrap();
        let prog = program_fn(|v| {
            let q = v.get("q");
            let y = v.tape().constant(Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
            let f = q.t().matmul(y).norm1().scale(0.5);
            ProgramOutput { f, ci: vec![], ce: vec![q.t().matmul(q) - 1.0] }
        });
        Problem::new(space, prog, 0, 1)
    }

    #[test]
    fn odl_at_unit_vector() {
        let e = odl_identity().eval_all(&FlatVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(e.f, 0.5);
        assert_eq!(e.grad_f.as_slice(), &[0.5, 0.0]);
        assert_eq!(e.ce, vec![0.0]);
        assert_eq!(e.grad_ce.column(0).as_slice(), &[2.0, 0.0]);
        assert_eq!((e.v_total, e.v_max), (0.0, 0.0));

        assert_eq!(penalty_gradient(1.0, &e).as_slice(), &[0.5, 0.0]);
        let mut pushed = e.clone();
        pushed.ce = vec![0.1];
        assert_eq!(penalty_gradient(1.0, &pushed).as_slice(), &[2.5, 0.0]);
    }

    #[test]
    fn violation_measures() {
        let e = bare(vec![-1.0], vec![]);
        assert_eq!((e.v_total, e.v_max), (0.0, 0.0));
        let e = bare(vec![0.3, -1.0], vec![-0.2]);
        assert!((e.v_total - 0.5).abs() < 1e-15);
        assert_eq!(e.v_max, 0.3);
    }

    #[test]
    fn penalty_values() {
        let mut e = bare(vec![0.5], vec![]);
        assert_eq!(penalty_value(0.5, &e), 1.5);
        e = bare(vec![0.7], vec![]);
        assert_eq!(penalty_value(0.0, &e), 0.7);
        e = bare(vec![-0.7], vec![]);
        assert_eq!(penalty_value(1.0, &e), e.f);
    }

    #[test]
    fn zero_mu_and_strictly_feasible_gives_zero_gradient() {
        let mut e = bare(vec![-1.0, -2.0], vec![]);
        e.grad_f = FlatVector::from_vec(vec![3.0, 4.0]);
        e.grad_ci = DMatrix::from_element(2, 2, 1.0);
        assert_eq!(penalty_gradient(0.0, &e), FlatVector::zeros(2));
    }

    #[test]
    fn analytic_mode_requires_gradients() {
        assert_eq!(odl_identity().with_mode(GradientMode::Analytic).unwrap_err(), ProblemError::NoAnalyticGradients);
    }

    #[test]
    fn count_mismatch_is_reported() {
        let space = VarSpace::new([("q", vec![2, 1])]).unwrap();
        let p = Problem::new(space, program_fn(|v| ProgramOutput::objective(v.get("q").sum())), 1, 0);
        assert!(matches!(p.eval_all(&FlatVector::zeros(2)), Err(ProblemError::CountMismatch { .. })));
    }
}
