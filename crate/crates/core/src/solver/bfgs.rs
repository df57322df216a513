use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsUpdate {
    pub w: DMatrix<f64>,
    pub skipped: bool,
}

/// Inverse-BFGS update `W′ = (I − ρsyᵀ) W (I − ρysᵀ) + ρssᵀ`, `ρ = 1/sᵀy`.
///
/// Skipped (W returned unchanged) when `sᵀy ≤ tol·‖s‖‖y‖`, or when rounding
/// leaves the updated matrix without a Cholesky factorization. The result
/// is exactly symmetric and satisfies `W′y = s` up to rounding.
pub fn bfgs_update(w: &DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>, tol: f64) -> BfgsUpdate {
    let sy = s.dot(y);
    if !(sy > tol * s.norm() * y.norm()) || !sy.is_finite() {
        return BfgsUpdate { w: w.clone(), skipped: true };
    }
    let rho = 1.0 / sy;
    let wy = w * y;
    let ywy = y.dot(&wy);
    let coef = rho * rho * ywy + rho;
    let n = w.nrows();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = w[(i, j)] - rho * (s[i] * wy[j] + wy[i] * s[j]) + coef * s[i] * s[j];
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    if out.clone().cholesky().is_none() {
        return BfgsUpdate { w: w.clone(), skipped: true };
    }
    BfgsUpdate { w: out, skipped: false }
}
