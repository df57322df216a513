use nalgebra::DVector;

use super::admm::solve_kkt;
use super::{residuals, QpError, QpProblem, QpSolution, QpStatus};

const MAX_ROWS: usize = 20;
const FEAS_TOL: f64 = 1e-9;
const KKT_TOL: f64 = 1e-8;

/// Exact solution by enumerating every lower/upper/inactive assignment of
/// the constraint rows and solving the resulting equality-constrained KKT
/// system. Exponential in `m`; rejects problems with more than 20 rows.
pub fn active_set_oracle(prob: &QpProblem) -> Result<QpSolution, QpError> {
    prob.validate()?;
    let m = prob.m();
    if m > MAX_ROWS {
        return Err(QpError::TooLarge(m));
    }
    let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
    let mut assignment = vec![0u8; m];
    let mut candidates = 0usize;
    loop {
        if let Some((x, y)) = try_assignment(prob, &assignment) {
            candidates += 1;
            let obj = prob.objective(&x);
            if best.as_ref().is_none_or(|(b, _, _)| obj < *b) {
                best = Some((obj, x, y));
            }
        }
        if !advance(&mut assignment) {
            break;
        }
    }
    let (_, x, y) = best.ok_or(QpError::Infeasible)?;
    let res = residuals(prob, &x, &y);
    Ok(QpSolution { x, y, status: QpStatus::Solved, iterations: candidates, residuals: res, polished: false })
}

// base-3 counter: 0 inactive, 1 lower, 2 upper
fn advance(a: &mut [u8]) -> bool {
    for d in a.iter_mut() {
        if *d < 2 {
            *d += 1;
            return true;
        }
        *d = 0;
    }
    false
}

fn try_assignment(prob: &QpProblem, assignment: &[u8]) -> Option<(DVector<f64>, DVector<f64>)> {
    let mut rows = Vec::new();
    for (i, &s) in assignment.iter().enumerate() {
        let eq = prob.l[i] == prob.u[i];
        match s {
            0 if eq => return None,
            1 if prob.l[i].is_infinite() => return None,
            2 if prob.u[i].is_infinite() || eq => return None,
            1 => rows.push((i, prob.l[i])),
            2 => rows.push((i, prob.u[i])),
            _ => {}
        }
    }
    let (x, y_act) = solve_kkt(&prob.p, &prob.q, &prob.a, &rows)?;
    let mut y = DVector::zeros(prob.m());
    for (k, &(i, _)) in rows.iter().enumerate() {
        y[i] = y_act[k];
    }
    // stationarity must hold exactly on this active set (singular systems may not admit a solution)
    let scale = 1.0 + prob.q.amax();
    if prob.dual_residual(&x, &y) > KKT_TOL * scale {
        return None;
    }
    let ax = &prob.a * &x;
    for (i, &s) in assignment.iter().enumerate() {
        let slack = FEAS_TOL * (1.0 + ax[i].abs());
        if ax[i] < prob.l[i] - slack || ax[i] > prob.u[i] + slack {
            return None;
        }
        if prob.l[i] != prob.u[i] {
            let sign_ok = match s {
                1 => y[i] <= KKT_TOL,
                2 => y[i] >= -KKT_TOL,
                _ => true,
            };
            if !sign_ok {
                return None;
            }
        }
    }
    Some((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn box_qp() {
        let prob = QpProblem::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, -3.0),
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 0.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        let sol = active_set_oracle(&prob).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible() {
        let prob = QpProblem::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::zeros(1),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            DVector::from_vec(vec![f64::NEG_INFINITY, 1.0]),
            DVector::from_vec(vec![0.0, f64::INFINITY]),
        )
        .unwrap();
        assert_eq!(active_set_oracle(&prob), Err(QpError::Infeasible));
    }

    #[test]
    fn too_large() {
        let prob = QpProblem::new(
            DMatrix::identity(1, 1),
            DVector::zeros(1),
            DMatrix::from_element(21, 1, 1.0),
            DVector::from_element(21, -1.0),
            DVector::from_element(21, 1.0),
        )
        .unwrap();
        assert_eq!(active_set_oracle(&prob), Err(QpError::TooLarge(21)));
    }
}
