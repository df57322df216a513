//! Weak-Wolfe line search by expansion and bisection.
//!
//! Starting at `t = 1`, a trial that fails the sufficient-decrease (Armijo)
//! condition becomes the upper end of the bracket; one that fails the
//! curvature condition becomes the lower end. Without an upper end the step
//! doubles, otherwise it bisects. The weak (one-sided) curvature condition
//! can be met across kinks, which the strong version cannot.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LineSearchError {
    #[error("not a descent direction (directional derivative {0})")]
    NotDescent(f64),
    #[error("no acceptable step after {evals} evaluations")]
    Failure { evals: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WolfeParams {
    pub c1: f64,
    pub c2: f64,
    pub max_evals: usize,
}

/// The accepted step together with what was measured there.
#[derive(Debug, Clone, PartialEq)]
pub struct Accepted<T> {
    pub t: f64,
    pub evals: usize,
    pub phi: f64,
    pub dphi: f64,
    pub payload: T,
}

pub fn armijo_holds(phi0: f64, dphi0: f64, t: f64, phi_t: f64, c1: f64) -> bool {
    phi_t <= phi0 + c1 * t * dphi0
}

pub fn curvature_holds(dphi0: f64, dphi_t: f64, c2: f64) -> bool {
    dphi_t >= c2 * dphi0
}

/// Searches along a 1-D function given its value and directional derivative
/// at 0. `eval(t)` returns `(φ(t), φ′(t), payload)`, or `None` if the point
/// could not be evaluated; such trials are treated as failing Armijo.
pub fn weak_wolfe<T>(
    phi0: f64,
    dphi0: f64,
    params: &WolfeParams,
    mut eval: impl FnMut(f64) -> Option<(f64, f64, T)>,
) -> Result<Accepted<T>, LineSearchError> {
    if !(dphi0 < 0.0) {
        return Err(LineSearchError::NotDescent(dphi0));
    }
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut t = 1.0;
    for evals in 1..=params.max_evals {
        match eval(t) {
            Some((phi, dphi, payload)) if phi.is_finite() => {
                if !armijo_holds(phi0, dphi0, t, phi, params.c1) {
                    hi = t;
                } else if !curvature_holds(dphi0, dphi, params.c2) {
                    lo = t;
                } else {
                    return Ok(Accepted { t, evals, phi, dphi, payload });
                }
            }
            _ => hi = t,
        }
        t = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo };
    }
    Err(LineSearchError::Failure { evals: params.max_evals })
}

/// Plain form for a scalar function returning `(φ(t), φ′(t))`. Returns the
/// accepted step and the number of evaluations.
pub fn line_search_weak_wolfe(
    mut phi: impl FnMut(f64) -> (f64, f64),
    params: &WolfeParams,
) -> Result<(f64, usize), LineSearchError> {
    let (phi0, dphi0) = phi(0.0);
    weak_wolfe(phi0, dphi0, params, |t| {
        let (v, d) = phi(t);
        Some((v, d, ()))
    })
    .map(|a| (a.t, a.evals))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: WolfeParams = WolfeParams { c1: 1e-4, c2: 0.5, max_evals: 50 };

    #[test]
    fn quadratic_accepts_unit_step() {
        let (t, evals) = line_search_weak_wolfe(|t| ((t - 1.0).powi(2), 2.0 * (t - 1.0)), &P).unwrap();
        assert_eq!((t, evals), (1.0, 1));
    }

    #[test]
    fn kink_with_left_derivative_steps_past_it() {
        // φ(t) = |1 − t| reporting the one-sided derivative −1 at the kink.
        let (t, _) = line_search_weak_wolfe(
            |t| ((1.0 - t).abs(), if t <= 1.0 { -1.0 } else { 1.0 }),
            &P,
        )
        .unwrap();
        assert!(t > 1.0 && t <= 2.0 / (1.0 + P.c1), "{t}");
    }

    #[test]
    fn kink_with_zero_sign_convention_stops_on_it() {
        // With sign(0) = 0 the derivative at the kink is 0 ≥ c2·φ′(0).
        let (t, _) = line_search_weak_wolfe(
            |t| ((1.0 - t).abs(), -crate::tensor::sign(1.0 - t)),
            &P,
        )
        .unwrap();
        assert_eq!(t, 1.0);
    }

    #[test]
    fn ascent_is_rejected() {
        assert_eq!(line_search_weak_wolfe(|t| (t, 1.0), &P), Err(LineSearchError::NotDescent(1.0)));
    }

    #[test]
    fn unbounded_below_exhausts_budget() {
        let r = line_search_weak_wolfe(|t| (-t, -1.0), &WolfeParams { max_evals: 10, ..P });
        assert_eq!(r, Err(LineSearchError::Failure { evals: 10 }));
    }

    #[test]
    fn failed_evaluations_shrink_the_step() {
        let mut seen = Vec::new();
        // φ(t) = (0.2 − t)², undefined beyond t = 0.3
        let res = weak_wolfe(0.04, -0.4, &P, |t| {
            seen.push(t);
            (t < 0.3).then(|| ((0.2 - t).powi(2), 2.0 * (t - 0.2), ()))
        });
        let acc = res.unwrap();
        assert!(acc.t < 0.3);
        assert_eq!(seen[0], 1.0);
    }
}
