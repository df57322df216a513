//! Ready-made problems: orthogonal dictionary learning, a small
//! feature-budget adversarial attack, and a suite with known optima.

mod attack;
mod odl;
pub mod suite;

use thiserror::Error;

pub use attack::{
    attack_instances, attack_margin, attack_oracle, feature_distance, toy_attack_problem, AttackInstance, TinyNet,
};
pub use odl::{gen_odl_data, odl_problem, odl_success, OdlData};
pub use suite::{analytic_suite, SuiteEntry};

use crate::tensor::Tensor;
use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExampleError {
    #[error("bad dimensions: {0}")]
    BadDimensions(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("no correctly classified input found after {0} draws")]
    NoCleanInput(usize),
}

/// Row-major tensor copy of a matrix.
pub(crate) fn matrix_tensor(m: &DMatrix<f64>) -> Tensor {
    Tensor::matrix(m.nrows(), m.ncols(), m.transpose().as_slice().to_vec())
}
