use nalgebra::{DMatrix, DVector};

use super::{solve_qp, QpError, QpProblem, QpSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    /// Convex-combination weights, one per column.
    pub sigma: DVector<f64>,
    /// `‖G σ‖₂`.
    pub value: f64,
}

/// Minimum-norm point of the convex hull of the columns of `g`:
/// `min ‖Gσ‖₂` over the unit simplex.
///
/// The problem is lowered to standard form with `P = GᵀG`, `A = [1ᵀ; I]`,
/// `l = [1; 0]`, `u = [1; ∞]` and handed to [`solve_qp`]. The reported
/// value is `‖Gσ‖₂` of the clamped, renormalized weights. Columns are
/// rescaled by the largest magnitude entry first, which leaves the
/// minimizer unchanged.
pub fn solve_simplex_qp(g: &DMatrix<f64>, settings: &QpSettings) -> Result<SimplexSolution, QpError> {
    let k = g.ncols();
    if k == 0 {
        return Err(QpError::DimensionMismatch("need at least one column".into()));
    }
    if k == 1 {
        return Ok(SimplexSolution { sigma: DVector::from_element(1, 1.0), value: g.column(0).norm() });
    }
    let scale = if g.is_empty() { 0.0 } else { g.amax() };
    if scale == 0.0 {
        return Ok(SimplexSolution { sigma: DVector::from_element(k, 1.0 / k as f64), value: 0.0 });
    }
    let gs = g / scale;
    let p = gs.tr_mul(&gs);
    let mut a = DMatrix::zeros(k + 1, k);
    a.row_mut(0).fill(1.0);
    a.view_mut((1, 0), (k, k)).fill_with_identity();
    let mut l = DVector::zeros(k + 1);
    l[0] = 1.0;
    let mut u = DVector::from_element(k + 1, f64::INFINITY);
    u[0] = 1.0;
    let qp = QpProblem::new(p, DVector::zeros(k), a, l, u)?;
    let sol = solve_qp(&qp, settings)?;

    let mut sigma = sol.x.map(|v| v.max(0.0));
    let total = sigma.sum();
    if total > 0.0 && total.is_finite() {
        sigma /= total;
    } else {
        sigma = DVector::from_element(k, 1.0 / k as f64);
    }
    // ‖Gσ‖ directly: sqrt(σᵀPσ) turns O(ε) rounding into O(√ε).
    let value_of = |s: &DVector<f64>| (g * s).norm();
    let mut value = value_of(&sigma);

    // A vertex can never be worse than the QP answer.
    let (best_col, best_norm) = (0..k)
        .map(|j| (j, g.column(j).norm()))
        .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    if best_norm < value {
        sigma = DVector::zeros(k);
        sigma[best_col] = 1.0;
        value = best_norm;
    }
    Ok(SimplexSolution { sigma, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(cols: &[&[f64]]) -> SimplexSolution {
        let n = cols[0].len();
        let g = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        solve_simplex_qp(&g, &QpSettings::default()).unwrap()
    }

    #[test]
    fn opposite_gradients() {
        let s = solve(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        assert!(s.value < 1e-8);
        assert!((s.sigma[0] - 0.5).abs() < 1e-8 && (s.sigma[1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn orthogonal_gradients() {
        let s = solve(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!((s.value - 0.5f64.sqrt()).abs() < 1e-8, "{}", s.value);
        assert!((s.sigma[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn single_column() {
        let s = solve(&[&[3.0, 4.0]]);
        assert_eq!(s.value, 5.0);
        assert_eq!(s.sigma.as_slice(), &[1.0]);
    }

    #[test]
    fn zero_columns_rejected() {
        assert!(solve_simplex_qp(&DMatrix::zeros(2, 0), &QpSettings::default()).is_err());
    }
}
