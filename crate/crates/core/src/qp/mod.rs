//! Dense convex quadratic programming.
//!
//! Problems have the form
//!
//! ```text
//!     minimize    ½ xᵀPx + qᵀx
//!     subject to  l ≤ Ax ≤ u
//! ```
//!
//! [`solve_qp`] is an operator-splitting (ADMM) method in the style of OSQP,
//! followed by a polishing step that solves the equality-constrained KKT
//! system on the detected active set. [`active_set_oracle`] enumerates all
//! active sets and is only meant for small problems and tests.

mod admm;
mod oracle;
mod simplex;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use admm::solve_qp;
pub use oracle::active_set_oracle;
pub use simplex::{solve_simplex_qp, SimplexSolution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("lower bound exceeds upper bound in row {0}")]
    InvalidBounds(usize),
    #[error("P + σI is not positive definite")]
    NonPsd,
    #[error("problem too large for enumeration ({0} constraints)")]
    TooLarge(usize),
    #[error("problem is infeasible")]
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub l: DVector<f64>,
    pub u: DVector<f64>,
}

impl QpProblem {
    pub fn new(
        p: DMatrix<f64>,
        q: DVector<f64>,
        a: DMatrix<f64>,
        l: DVector<f64>,
        u: DVector<f64>,
    ) -> Result<Self, QpError> {
        let qp = Self { p, q, a, l, u };
        qp.validate()?;
        Ok(qp)
    }

    /// An unconstrained problem (`m = 0`).
    pub fn unconstrained(p: DMatrix<f64>, q: DVector<f64>) -> Self {
        let n = q.len();
        Self { p, q, a: DMatrix::zeros(0, n), l: DVector::zeros(0), u: DVector::zeros(0) }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> usize {
        self.l.len()
    }

    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.q.len();
        let m = self.l.len();
        if self.p.shape() != (n, n) {
            return Err(QpError::DimensionMismatch(format!("P is {:?}, expected ({n}, {n})", self.p.shape())));
        }
        if self.a.shape() != (m, n) {
            return Err(QpError::DimensionMismatch(format!("A is {:?}, expected ({m}, {n})", self.a.shape())));
        }
        if self.u.len() != m {
            return Err(QpError::DimensionMismatch(format!("u has length {}, expected {m}", self.u.len())));
        }
        if let Some(i) = (0..m).find(|&i| !(self.l[i] <= self.u[i])) {
            return Err(QpError::InvalidBounds(i));
        }
        Ok(())
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }

    /// `‖clamp(Ax) − Ax‖∞`.
    pub fn primal_residual(&self, x: &DVector<f64>) -> f64 {
        let ax = &self.a * x;
        (0..self.m())
            .map(|i| (ax[i].clamp(self.l[i], self.u[i]) - ax[i]).abs())
            .fold(0.0, f64::max)
    }

    /// `‖Px + q + Aᵀy‖∞`.
    pub fn dual_residual(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (&self.p * x + &self.q + self.a.tr_mul(y)).amax()
    }

    /// `|xᵀPx + qᵀx + uᵀy₊ − lᵀy₋|`, with `0·∞` read as 0.
    pub fn duality_gap(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let support: f64 = (0..self.m())
            .map(|i| {
                if y[i] > 0.0 {
                    self.u[i] * y[i]
                } else if y[i] < 0.0 {
                    self.l[i] * y[i]
                } else {
                    0.0
                }
            })
            .sum();
        (x.dot(&(&self.p * x)) + self.q.dot(x) + support).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Solved,
    MaxIter,
    PrimalInfeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub residuals: Residuals,
    pub polished: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub eps_prim_inf: f64,
    pub max_iter: usize,
    pub polish: bool,
    /// Rows whose value is within this distance of a bound enter the polishing active set.
    pub polish_active_tol: f64,
    /// Polishing is attempted every this many iterations once residuals are small.
    pub polish_every: usize,
    /// Rebalance `rho` from the residual ratio every `adaptive_rho_interval` iterations.
    pub adaptive_rho: bool,
    pub adaptive_rho_interval: usize,
    /// `rho` is only changed (and the system refactored) when the proposed
    /// value differs by more than this factor.
    pub adaptive_rho_tolerance: f64,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            rho: 0.1,
            sigma: 1e-6,
            alpha: 1.6,
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            eps_prim_inf: 1e-5,
            max_iter: 20_000,
            polish: true,
            polish_active_tol: 1e-6,
            polish_every: 25,
            adaptive_rho: true,
            adaptive_rho_interval: 25,
            adaptive_rho_tolerance: 5.0,
        }
    }
}

pub(crate) fn residuals(p: &QpProblem, x: &DVector<f64>, y: &DVector<f64>) -> Residuals {
    Residuals { primal: p.primal_residual(x), dual: p.dual_residual(x, y), gap: p.duality_gap(x, y) }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    use rand_xoshiro::SplitMix64;

    /// Random PSD QP with `n` variables and `m` two-sided constraints that is
    /// always feasible (bounds are built around `A x₀`).
    pub fn random_qp(seed: u64, n: usize, m: usize, rank: usize) -> QpProblem {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let mut g = || -> f64 { rng.sample(StandardNormal) };
        let f = DMatrix::from_fn(rank, n, |_, _| g());
        let p = f.tr_mul(&f);
        let q = DVector::from_fn(n, |_, _| g());
        let a = DMatrix::from_fn(m, n, |_, _| g());
        let x0 = DVector::from_fn(n, |_, _| 0.5 * g());
        let ax0 = &a * &x0;
        let mut l = DVector::zeros(m);
        let mut u = DVector::zeros(m);
        for i in 0..m {
            let (lo, hi): (f64, f64) = (g().abs() * 0.5, g().abs() * 0.5);
            let kind = (g() * 10.0).abs() as u64 % 4;
            l[i] = if kind == 1 { f64::NEG_INFINITY } else { ax0[i] - lo };
            u[i] = if kind == 2 { f64::INFINITY } else { ax0[i] + hi };
            if kind == 3 {
                l[i] = ax0[i];
                u[i] = ax0[i];
            }
        }
        QpProblem::new(p, q, a, l, u).unwrap()
    }
}
