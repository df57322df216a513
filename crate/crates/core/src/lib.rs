//! BFGS-SQP for nonsmooth, nonconvex, constrained optimization.
//!
//! Problems are written as tensor programs over named variables; gradients
//! come from reverse-mode automatic differentiation. The solver combines
//! inverse-BFGS updating with a steering QP for search directions, a
//! weak-Wolfe line search on an exact penalty function, and a stationarity
//! measure computed from nearby penalty gradients.

pub mod autodiff;
pub mod examples;
pub mod problem;
pub mod qp;
pub mod rng;
pub mod solver;
pub mod tensor;
pub mod varspace;

pub use autodiff::{evaluate_and_record, gradient_check, gradient_errors, program_fn, ProgramOutput, Tape, TensorProgram, TracedVars, Var};
pub use tensor::Tensor;
pub use varspace::{FlatVector, VarSpace, VarSpaceError, VarStruct};
