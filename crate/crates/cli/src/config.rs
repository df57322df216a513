//! Run configuration files.
//!
//! ```json
//! {
//!   "problem": {"name": "odl", "n": 10, "m": 1000, "theta": 0.3},
//!   "options": {"max_iter": 500, "qp": {"adaptive_rho": false}},
//!   "seed": 0
//! }
//! ```

use std::path::Path;

use bfgsqp::problem::GradientMode;
use bfgsqp::solver::SolverOptions;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSelector,
    #[serde(default)]
    pub options: OptionOverrides,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gradients {
    #[default]
    Autodiff,
    Analytic,
}

impl From<Gradients> for GradientMode {
    fn from(g: Gradients) -> Self {
        match g {
            Gradients::Autodiff => GradientMode::Autodiff,
            Gradients::Analytic => GradientMode::Analytic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSelector {
    Quadratic {
        #[serde(default)]
        gradients: Gradients,
    },
    Disk {
        #[serde(default)]
        gradients: Gradients,
    },
    L1Fit {
        #[serde(default)]
        gradients: Gradients,
    },
    CircleLinear {
        #[serde(default)]
        gradients: Gradients,
    },
    Odl {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default = "default_theta")]
        theta: f64,
        #[serde(default)]
        gradients: Gradients,
    },
    Attack {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
}

fn default_n() -> usize {
    10
}

fn default_m() -> usize {
    1000
}

fn default_theta() -> f64 {
    0.3
}

fn default_epsilon() -> f64 {
    0.5
}

impl ProblemSelector {
    /// Looks a problem up by name with default parameters.
    pub fn by_name(name: &str) -> Result<Self, CliError> {
        let json = format!("{{\"name\": {}}}", serde_json::Value::String(name.to_string()));
        serde_json::from_str(&json).map_err(|_| CliError::Usage(format!("unknown problem `{name}`")))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionOverrides {
    pub max_iter: Option<usize>,
    pub opt_tol: Option<f64>,
    pub viol_ineq_tol: Option<f64>,
    pub viol_eq_tol: Option<f64>,
    pub mu_init: Option<f64>,
    pub mu_shrink: Option<f64>,
    pub steering_c_v: Option<f64>,
    pub steering_max_rounds: Option<usize>,
    pub wolfe_c1: Option<f64>,
    pub wolfe_c2: Option<f64>,
    pub linesearch_max_evals: Option<usize>,
    pub grad_cache_size: Option<usize>,
    pub grad_cache_radius: Option<f64>,
    pub curvature_skip_tol: Option<f64>,
    #[serde(default)]
    pub qp: QpOverrides,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpOverrides {
    pub rho: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub eps_abs: Option<f64>,
    pub eps_rel: Option<f64>,
    pub max_iter: Option<usize>,
    pub polish: Option<bool>,
    pub adaptive_rho: Option<bool>,
}

macro_rules! apply {
    ($dst:expr, $src:expr; $($field:ident),*) => {
        $(if let Some(v) = $src.$field { $dst.$field = v; })*
    };
}

impl OptionOverrides {
    /// Applies the overrides on top of `base` and validates the result.
    pub fn apply(&self, mut base: SolverOptions) -> Result<SolverOptions, CliError> {
        apply!(base, self; max_iter, opt_tol, viol_ineq_tol, viol_eq_tol, mu_init, mu_shrink,
            steering_c_v, steering_max_rounds, wolfe_c1, wolfe_c2, linesearch_max_evals,
            grad_cache_radius, curvature_skip_tol);
        if self.grad_cache_size.is_some() {
            base.grad_cache_size = self.grad_cache_size;
        }
        apply!(base.qp, self.qp; rho, sigma, alpha, eps_abs, eps_rel, max_iter, polish, adaptive_rho);
        base.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(base)
    }
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
