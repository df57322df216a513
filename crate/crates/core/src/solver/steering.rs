//! Search directions from the penalty-parameter steering QP.
//!
//! For a penalty parameter `μ` the direction solves
//!
//! ```text
//!     min_d  μ∇fᵀd + ½ dᵀHd + Σ max(0, cᵢ + ∇cᵢᵀd) + Σ |cⱼ + ∇cⱼᵀd|
//! ```
//!
//! with `H = W⁻¹`, lowered to a QP with one slack per inequality and per
//! equality. If the direction's predicted violation reduction falls short of
//! `c_v` times that of the pure feasibility direction (`μ = 0`), `μ` shrinks
//! and the QP is solved again.

use nalgebra::{DMatrix, DVector};

use crate::problem::{penalty_gradient, Evaluation};
use crate::qp::{solve_qp, QpProblem, QpSettings, QpStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringParams {
    pub c_v: f64,
    pub mu_shrink: f64,
    pub max_rounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringResult {
    pub d: DVector<f64>,
    pub mu: f64,
    /// `v(x) − model violation at d`.
    pub predicted_reduction: f64,
    /// The same quantity for the `μ = 0` direction.
    pub feasibility_reduction: f64,
    /// Number of times `μ` was shrunk.
    pub rounds: usize,
    /// The QP failed and `d = −W∇φ_μ` was used instead.
    pub fallback: bool,
    /// Rounds ran out before the reduction test passed.
    pub exhausted: bool,
}

/// Violation of the linearized constraints at `x + d`.
pub fn model_violation(eval: &Evaluation, d: &DVector<f64>) -> f64 {
    let ci = eval.grad_ci.tr_mul(d);
    let ce = eval.grad_ce.tr_mul(d);
    let ineq: f64 = eval.ci.iter().zip(ci.iter()).map(|(c, g)| (c + g).max(0.0)).sum();
    let eq: f64 = eval.ce.iter().zip(ce.iter()).map(|(c, g)| (c + g).abs()).sum();
    ineq + eq
}

pub fn predicted_reduction(eval: &Evaluation, d: &DVector<f64>) -> f64 {
    eval.v_total - model_violation(eval, d)
}

/// Solves the steering subproblem for a fixed `μ`. `None` if the QP did not solve.
pub fn direction_qp(
    eval: &Evaluation,
    mu: f64,
    h: &DMatrix<f64>,
    settings: &QpSettings,
) -> Option<DVector<f64>> {
    let n = eval.x.len();
    let mi = eval.ci.len();
    let me = eval.ce.len();
    let nv = n + mi + me;
    let rows = 2 * mi + 2 * me;

    let mut p = DMatrix::zeros(nv, nv);
    p.view_mut((0, 0), (n, n)).copy_from(h);
    let mut q = DVector::from_element(nv, 1.0);
    q.rows_mut(0, n).copy_from(&(&eval.grad_f * mu));

    let mut a = DMatrix::zeros(rows, nv);
    let mut l = DVector::zeros(rows);
    let u = DVector::from_element(rows, f64::INFINITY);
    let mut r = 0;
    for i in 0..mi {
        // sᵢ − ∇cᵢᵀd ≥ cᵢ
        for k in 0..n {
            a[(r, k)] = -eval.grad_ci[(k, i)];
        }
        a[(r, n + i)] = 1.0;
        l[r] = eval.ci[i];
        r += 1;
        // sᵢ ≥ 0
        a[(r, n + i)] = 1.0;
        r += 1;
    }
    for j in 0..me {
        // tⱼ − ∇cⱼᵀd ≥ cⱼ  and  tⱼ + ∇cⱼᵀd ≥ −cⱼ
        for k in 0..n {
            a[(r, k)] = -eval.grad_ce[(k, j)];
            a[(r + 1, k)] = eval.grad_ce[(k, j)];
        }
        a[(r, n + mi + j)] = 1.0;
        a[(r + 1, n + mi + j)] = 1.0;
        l[r] = eval.ce[j];
        l[r + 1] = -eval.ce[j];
        r += 2;
    }

    let qp = QpProblem::new(p, q, a, l, u).ok()?;
    let sol = solve_qp(&qp, settings).ok()?;
    if sol.status != QpStatus::Solved || sol.x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(sol.x.rows(0, n).into_owned())
}

/// Computes a steered search direction; the returned `μ` never exceeds the input.
pub fn steering_direction(
    eval: &Evaluation,
    mu: f64,
    w: &DMatrix<f64>,
    h: &DMatrix<f64>,
    params: &SteeringParams,
    settings: &QpSettings,
) -> SteeringResult {
    let unconstrained = eval.ci.is_empty() && eval.ce.is_empty();
    if unconstrained {
        let d = -(w * &eval.grad_f) * mu;
        return SteeringResult {
            d,
            mu,
            predicted_reduction: 0.0,
            feasibility_reduction: 0.0,
            rounds: 0,
            fallback: false,
            exhausted: false,
        };
    }
    let fallback = |mu: f64| SteeringResult {
        d: -(w * penalty_gradient(mu, eval)),
        mu,
        predicted_reduction: 0.0,
        feasibility_reduction: 0.0,
        rounds: 0,
        fallback: true,
        exhausted: false,
    };

    let Some(mut d) = direction_qp(eval, mu, h, settings) else {
        return fallback(mu);
    };
    let mut pred = predicted_reduction(eval, &d);
    let mut mu_cur = mu;
    let mut rounds = 0;
    let mut feas = 0.0;
    let mut exhausted = false;

    // Only worth computing when the current direction loses ground on feasibility.
    if eval.v_total > 0.0 || pred < 0.0 {
        let Some(d0) = direction_qp(eval, 0.0, h, settings) else {
            return fallback(mu);
        };
        feas = predicted_reduction(eval, &d0);
        while feas > 0.0 && pred < params.c_v * feas {
            if rounds == params.max_rounds {
                exhausted = true;
                break;
            }
            mu_cur *= params.mu_shrink;
            rounds += 1;
            match direction_qp(eval, mu_cur, h, settings) {
                Some(next) => {
                    d = next;
                    pred = predicted_reduction(eval, &d);
                }
                None => return SteeringResult { rounds, ..fallback(mu_cur) },
            }
        }
    }
    SteeringResult {
        d,
        mu: mu_cur,
        predicted_reduction: pred,
        feasibility_reduction: feas,
        rounds,
        fallback: false,
        exhausted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varspace::FlatVector;

    fn params() -> SteeringParams {
        SteeringParams { c_v: 0.1, mu_shrink: 0.5, max_rounds: 10 }
    }

    fn eval_with(x: &[f64], grad_f: &[f64], ci: &[(f64, &[f64])], ce: &[(f64, &[f64])]) -> Evaluation {
        let gci: Vec<FlatVector> = ci.iter().map(|(_, g)| FlatVector::from_row_slice(g)).collect();
        let gce: Vec<FlatVector> = ce.iter().map(|(_, g)| FlatVector::from_row_slice(g)).collect();
        Evaluation::assemble(
            FlatVector::from_row_slice(x),
            0.0,
            FlatVector::from_row_slice(grad_f),
            ci.iter().map(|c| c.0).collect(),
            &gci,
            ce.iter().map(|c| c.0).collect(),
            &gce,
        )
    }

    #[test]
    fn unconstrained_is_scaled_gradient_step() {
        let e = eval_with(&[0.0, 0.0], &[2.0, 0.0], &[], &[]);
        let i = DMatrix::identity(2, 2);
        let r = steering_direction(&e, 1.0, &i, &i, &params(), &QpSettings::default());
        assert_eq!(r.d.as_slice(), &[-2.0, 0.0]);
        assert_eq!(r.mu, 1.0);
    }

    #[test]
    fn feasibility_direction_for_linear_equality() {
        // c(x) = x₁ − 1 at x = (3, 0): min ½d₁² + |2 + d₁| → d₁ = −1
        let e = eval_with(&[3.0, 0.0], &[0.0, 0.0], &[], &[(2.0, &[1.0, 0.0])]);
        let i = DMatrix::identity(2, 2);
        let d = direction_qp(&e, 0.0, &i, &QpSettings::default()).unwrap();
        assert!((d[0] + 1.0).abs() < 1e-8 && d[1].abs() < 1e-8, "{d}");
        assert_eq!(e.v_total, 2.0);
        assert!((model_violation(&e, &d) - 1.0).abs() < 1e-8);
        assert!((predicted_reduction(&e, &d) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn strictly_feasible_keeps_mu() {
        let e = eval_with(&[0.0, 0.0], &[1.0, 1.0], &[(-1.0, &[1.0, 0.0]), (-2.0, &[0.0, 1.0])], &[]);
        let i = DMatrix::identity(2, 2);
        let r = steering_direction(&e, 0.7, &i, &i, &params(), &QpSettings::default());
        assert_eq!(r.mu, 0.7);
        assert!(!r.fallback);
        assert!((r.d[0] + 0.7).abs() < 1e-8 && (r.d[1] + 0.7).abs() < 1e-8);
    }

    #[test]
    fn infeasible_point_shrinks_mu_until_progress() {
        // objective pulls away from the feasible half-space x₁ ≤ 0
        let e = eval_with(&[1.0, 0.0], &[-10.0, 0.0], &[(1.0, &[1.0, 0.0])], &[]);
        let i = DMatrix::identity(2, 2);
        let r = steering_direction(&e, 1.0, &i, &i, &params(), &QpSettings::default());
        assert!(r.mu < 1.0);
        assert!(r.predicted_reduction >= 0.1 * r.feasibility_reduction - 1e-9);
        assert!(r.rounds > 0 && !r.exhausted);
    }
}
