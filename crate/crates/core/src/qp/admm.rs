use nalgebra::{DMatrix, DVector};

use super::{residuals, QpError, QpProblem, QpSettings, QpSolution, QpStatus};

// Equality rows get a stiffer penalty, as in OSQP.
const RHO_EQ_SCALE: f64 = 1e3;
// Polishing KKT regularization and refinement.
const POLISH_DELTA: f64 = 1e-10;
const POLISH_REFINE: usize = 5;
// Early polishing is tried once both residuals fall below this relative level.
const POLISH_GATE: f64 = 1e-2;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;

/// Solves a convex QP with ADMM and polishes the result.
///
/// The same input and settings always produce bit-identical output.
pub fn solve_qp(prob: &QpProblem, settings: &QpSettings) -> Result<QpSolution, QpError> {
    prob.validate()?;
    let n = prob.n();
    let m = prob.m();

    let mut reg = prob.p.clone();
    for i in 0..n {
        reg[(i, i)] += settings.sigma;
    }
    if reg.clone().cholesky().is_none() {
        return Err(QpError::NonPsd);
    }

    let mut rho_base = settings.rho;
    let (mut rho, mut chol) = factor(prob, &reg, rho_base)?;
    let mut x = DVector::zeros(n);
    let mut z = DVector::zeros(m);
    let mut y = DVector::zeros(m);
    let alpha = settings.alpha;

    let mut status = QpStatus::MaxIter;
    let mut iterations = settings.max_iter;
    let mut polished: Option<(DVector<f64>, DVector<f64>)> = None;

    for k in 1..=settings.max_iter {
        let rhs = settings.sigma * &x - &prob.q + prob.a.tr_mul(&(rho.component_mul(&z) - &y));
        let x_t = chol.solve(&rhs);
        let z_t = &prob.a * &x_t;
        let x_next = alpha * &x_t + (1.0 - alpha) * &x;
        let z_relax = alpha * &z_t + (1.0 - alpha) * &z;
        let mut z_next = z_relax.clone();
        for i in 0..m {
            z_next[i] = (z_relax[i] + y[i] / rho[i]).clamp(prob.l[i], prob.u[i]);
        }
        let y_next = &y + rho.component_mul(&(&z_relax - &z_next));
        let dy = &y_next - &y;
        x = x_next;
        z = z_next;
        y = y_next;

        let ax = &prob.a * &x;
        let px = &prob.p * &x;
        let aty = prob.a.tr_mul(&y);
        let r_prim = if m == 0 { 0.0 } else { (&ax - &z).amax() };
        let r_dual = (&px + &prob.q + &aty).amax();
        let eps_prim = settings.eps_abs + settings.eps_rel * norm_inf(&ax).max(norm_inf(&z));
        let eps_dual = settings.eps_abs
            + settings.eps_rel * norm_inf(&px).max(norm_inf(&aty)).max(norm_inf(&prob.q));

        if r_prim <= eps_prim && r_dual <= eps_dual {
            status = QpStatus::Solved;
            iterations = k;
            break;
        }
        if m > 0 && primal_infeasible(prob, &dy, settings.eps_prim_inf) {
            status = QpStatus::PrimalInfeasible;
            iterations = k;
            break;
        }
        if settings.adaptive_rho && m > 0 && k % settings.adaptive_rho_interval == 0 {
            let prim_scale = norm_inf(&ax).max(norm_inf(&z)).max(1e-30);
            let dual_scale = norm_inf(&px).max(norm_inf(&aty)).max(norm_inf(&prob.q)).max(1e-30);
            let ratio = (r_prim / prim_scale) / (r_dual / dual_scale).max(1e-30);
            let proposed = (rho_base * ratio.sqrt()).clamp(RHO_MIN, RHO_MAX);
            if proposed.is_finite()
                && (proposed > settings.adaptive_rho_tolerance * rho_base
                    || proposed * settings.adaptive_rho_tolerance < rho_base)
            {
                rho_base = proposed;
                (rho, chol) = factor(prob, &reg, rho_base)?;
            }
        }
        if settings.polish
            && k % settings.polish_every == 0
            && r_prim <= POLISH_GATE * (1.0 + norm_inf(&z))
            && r_dual <= POLISH_GATE * (1.0 + norm_inf(&prob.q))
        {
            if let Some(sol) = polish(prob, &z, &y, settings) {
                polished = Some(sol);
                status = QpStatus::Solved;
                iterations = k;
                break;
            }
        }
    }

    if polished.is_none() && settings.polish && status == QpStatus::Solved {
        if let Some((px, py)) = polish(prob, &z, &y, settings) {
            let before = residuals(prob, &x, &y);
            let after = residuals(prob, &px, &py);
            if after.primal.max(after.dual) <= before.primal.max(before.dual) {
                polished = Some((px, py));
            }
        }
    }

    let was_polished = polished.is_some();
    if let Some((px, py)) = polished {
        x = px;
        y = py;
    }
    let res = residuals(prob, &x, &y);
    Ok(QpSolution { x, y, status, iterations, residuals: res, polished: was_polished })
}

/// Per-row penalties and the Cholesky factor of `P + σI + Aᵀ diag(ρ) A`.
fn factor(
    prob: &QpProblem,
    reg: &DMatrix<f64>,
    rho_base: f64,
) -> Result<(DVector<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>), QpError> {
    let m = prob.m();
    let rho = DVector::from_fn(m, |i, _| if prob.l[i] == prob.u[i] { RHO_EQ_SCALE * rho_base } else { rho_base });
    let mut ra = prob.a.clone();
    for i in 0..m {
        ra.row_mut(i).scale_mut(rho[i]);
    }
    let kkt = reg + prob.a.tr_mul(&ra);
    let chol = kkt.cholesky().ok_or(QpError::NonPsd)?;
    Ok((rho, chol))
}

fn norm_inf(v: &DVector<f64>) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.amax()
    }
}

fn primal_infeasible(prob: &QpProblem, dy: &DVector<f64>, eps: f64) -> bool {
    let dy_norm = norm_inf(dy);
    if dy_norm <= 1e-12 {
        return false;
    }
    if norm_inf(&prob.a.tr_mul(dy)) > eps * dy_norm {
        return false;
    }
    let mut support = 0.0;
    for i in 0..prob.m() {
        if dy[i] > 0.0 {
            if prob.u[i].is_infinite() {
                return false;
            }
            support += prob.u[i] * dy[i];
        } else if dy[i] < 0.0 {
            if prob.l[i].is_infinite() {
                return false;
            }
            support += prob.l[i] * dy[i];
        }
    }
    support < -eps * dy_norm
}

#[derive(Clone, Copy, PartialEq)]
enum Active {
    Lower,
    Upper,
    Equality,
}

/// Solves the KKT system on the active set guessed from `z` (and, failing
/// that, from the dual signs). Returns `None` unless the result is feasible
/// and dual-sign consistent within the configured tolerance.
fn polish(
    prob: &QpProblem,
    z: &DVector<f64>,
    y: &DVector<f64>,
    settings: &QpSettings,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let tol = settings.polish_active_tol;
    let by_distance: Vec<Option<Active>> = (0..prob.m())
        .map(|i| {
            if prob.l[i] == prob.u[i] {
                Some(Active::Equality)
            } else if z[i] - prob.l[i] <= tol {
                Some(Active::Lower)
            } else if prob.u[i] - z[i] <= tol {
                Some(Active::Upper)
            } else {
                None
            }
        })
        .collect();
    if let Some(sol) = polish_with(prob, &by_distance, settings) {
        return Some(sol);
    }
    let by_dual: Vec<Option<Active>> = (0..prob.m())
        .map(|i| {
            if prob.l[i] == prob.u[i] {
                Some(Active::Equality)
            } else if z[i] - prob.l[i] < -y[i] {
                Some(Active::Lower)
            } else if prob.u[i] - z[i] < y[i] {
                Some(Active::Upper)
            } else {
                None
            }
        })
        .collect();
    if by_dual == by_distance {
        return None;
    }
    polish_with(prob, &by_dual, settings)
}

fn polish_with(
    prob: &QpProblem,
    active: &[Option<Active>],
    settings: &QpSettings,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = prob.n();
    let rows: Vec<(usize, f64)> = active
        .iter()
        .enumerate()
        .filter_map(|(i, a)| {
            a.map(|kind| match kind {
                Active::Lower | Active::Equality => (i, prob.l[i]),
                Active::Upper => (i, prob.u[i]),
            })
        })
        .collect();
    let (x, y_act) = solve_kkt(&prob.p, &prob.q, &prob.a, &rows)?;

    let mut y = DVector::zeros(prob.m());
    for (k, &(i, _)) in rows.iter().enumerate() {
        y[i] = y_act[k];
    }
    let tol = settings.eps_abs.max(1e-9);
    for (i, a) in active.iter().enumerate() {
        let ok = match a {
            Some(Active::Lower) => y[i] <= tol,
            Some(Active::Upper) => y[i] >= -tol,
            _ => true,
        };
        if !ok {
            return None;
        }
    }
    let res = residuals(prob, &x, &y);
    let scale = 1.0 + norm_inf(&prob.q).max(norm_inf(&(&prob.p * &x)));
    if res.primal <= settings.eps_abs && res.dual <= settings.eps_abs * scale && x.len() == n {
        Some((x, y))
    } else {
        None
    }
}

/// Solves `[P Aᵀ; A 0] [x; y] = [−q; b]` for the given rows of `A`, via a
/// regularized factorization with iterative refinement.
pub(crate) fn solve_kkt(
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    a: &DMatrix<f64>,
    rows: &[(usize, f64)],
) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = q.len();
    let k = rows.len();
    let mut exact = DMatrix::zeros(n + k, n + k);
    exact.view_mut((0, 0), (n, n)).copy_from(p);
    for (r, &(i, _)) in rows.iter().enumerate() {
        for j in 0..n {
            exact[(n + r, j)] = a[(i, j)];
            exact[(j, n + r)] = a[(i, j)];
        }
    }
    let mut rhs = DVector::zeros(n + k);
    for j in 0..n {
        rhs[j] = -q[j];
    }
    for (r, &(_, b)) in rows.iter().enumerate() {
        rhs[n + r] = b;
    }
    let mut regularized = exact.clone();
    for j in 0..n {
        regularized[(j, j)] += POLISH_DELTA;
    }
    for r in 0..k {
        regularized[(n + r, n + r)] -= POLISH_DELTA;
    }
    let lu = regularized.lu();
    let mut sol = lu.solve(&rhs)?;
    for _ in 0..POLISH_REFINE {
        let resid = &rhs - &exact * &sol;
        sol += lu.solve(&resid)?;
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((sol.rows(0, n).into_owned(), sol.rows(n, k).into_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::testutil::random_qp;

    fn settings() -> QpSettings {
        QpSettings::default()
    }

    #[test]
    fn unconstrained_minimizer() {
        let prob = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::from_vec(vec![-1.0, -2.0]));
        let sol = solve_qp(&prob, &settings()).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((sol.x[0] - 1.0).abs() < 1e-8 && (sol.x[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn clipped_box() {
        let prob = QpProblem::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, -3.0),
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 0.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        let sol = solve_qp(&prob, &settings()).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((sol.x[0] - 1.0).abs() < 1e-8, "{}", sol.x[0]);
        assert!(sol.residuals.primal <= 1e-8 && sol.residuals.dual <= 1e-8);
        // multiplier of the active upper bound is 2
        assert!((sol.y[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = QpProblem {
            p: DMatrix::identity(2, 2),
            q: DVector::zeros(3),
            a: DMatrix::zeros(0, 3),
            l: DVector::zeros(0),
            u: DVector::zeros(0),
        };
        assert!(matches!(solve_qp(&bad, &settings()), Err(QpError::DimensionMismatch(_))));
        let indefinite = QpProblem::unconstrained(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            DVector::zeros(2),
        );
        assert_eq!(solve_qp(&indefinite, &settings()), Err(QpError::NonPsd));
    }

    #[test]
    fn detects_infeasibility() {
        // x ≤ 0 and x ≥ 1
        let prob = QpProblem::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::zeros(1),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            DVector::from_vec(vec![f64::NEG_INFINITY, 1.0]),
            DVector::from_vec(vec![0.0, f64::INFINITY]),
        )
        .unwrap();
        let sol = solve_qp(&prob, &settings()).unwrap();
        assert_eq!(sol.status, QpStatus::PrimalInfeasible);
    }

    #[test]
    fn deterministic_and_scale_covariant() {
        for seed in 0..10 {
            let prob = random_qp(seed, 5, 4, 5);
            let a = solve_qp(&prob, &settings()).unwrap();
            let b = solve_qp(&prob, &settings()).unwrap();
            assert_eq!(a.x, b.x);

            let mut scaled = prob.clone();
            scaled.p *= 7.5;
            scaled.q *= 7.5;
            let c = solve_qp(&scaled, &settings()).unwrap();
            assert!((a.x.clone() - c.x).amax() <= 1e-8, "seed {seed}");
        }
    }
}
