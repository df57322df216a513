//! Browser bindings for the solver demo page in `www/`.
//!
//! Each exported function takes plain numbers and returns a JSON string; the
//! Rust-side results are also available as typed values for native use.

use bfgsqp::qp::{solve_simplex_qp, QpSettings};
use bfgsqp::solver::{solve_observed, weak_wolfe, SolverOptions, WolfeParams};
use bfgsqp::tensor::sign;
use bfgsqp::{program_fn, problem::Problem, ProgramOutput, Tensor, VarSpace, VarStruct};
use nalgebra::DMatrix;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub points: Vec<[f64; 2]>,
    pub f: Vec<f64>,
    pub v_max: Vec<f64>,
    pub mu: Vec<f64>,
    pub best: [f64; 2],
    pub code: &'static str,
}

/// Projects `c` onto the unit disk, `min ‖x − c‖²  s.t.  ‖x‖² ≤ 1`, from `x0`.
pub fn disk_trajectory(c: [f64; 2], x0: [f64; 2], max_iter: usize) -> Result<Trajectory, String> {
    let space = VarSpace::new([("x", vec![2])]).map_err(|e| e.to_string())?;
    let problem = Problem::new(
        space,
        program_fn(move |v| {
            let x = v.get("x");
            let target = v.tape().constant(Tensor::vector(c.to_vec()));
            ProgramOutput { f: (x - target).norm2_sq(), ci: vec![x.norm2_sq() - 1.0], ce: vec![] }
        }),
        1,
        0,
    );
    let opts = SolverOptions { max_iter, ..Default::default() };
    let start = VarStruct::from([("x".to_string(), Tensor::vector(x0.to_vec()))]);
    let mut points = vec![x0];
    let sol = solve_observed(&problem, &opts, &start, |info| points.push([info.x[0], info.x[1]]))
        .map_err(|e| e.to_string())?;
    Ok(Trajectory {
        points,
        f: sol.iterate_log.iter().map(|r| r.f).collect(),
        v_max: sol.iterate_log.iter().map(|r| r.v_max).collect(),
        mu: sol.iterate_log.iter().map(|r| r.mu).collect(),
        best: [sol.best_flat[0], sol.best_flat[1]],
        code: sol.code.as_str(),
    })
}

/// One-dimensional test functions for the line-search explorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `|1 − t|`, kinked at the minimizer.
    Kink,
    /// `(t − 3)²`, minimized past the first trial.
    FarQuadratic,
    /// `max(1 − 2t, (t − 1)/2)`, an asymmetric kink at `t = 2/3`.
    Asymmetric,
}

impl Profile {
    pub fn parse(name: &str) -> Result<Self, String> {
        match name {
            "kink" => Ok(Profile::Kink),
            "far_quadratic" => Ok(Profile::FarQuadratic),
            "asymmetric" => Ok(Profile::Asymmetric),
            _ => Err(format!("unknown profile `{name}`")),
        }
    }

    /// Value and derivative; the derivative at a kink follows `sign(0) = 0`
    /// for `|·|` and the active piece for `max`.
    pub fn eval(self, t: f64) -> (f64, f64) {
        match self {
            Profile::Kink => ((1.0 - t).abs(), -sign(1.0 - t)),
            Profile::FarQuadratic => ((t - 3.0).powi(2), 2.0 * (t - 3.0)),
            Profile::Asymmetric => {
                let (a, b) = (1.0 - 2.0 * t, 0.5 * (t - 1.0));
                if a >= b {
                    (a, -2.0)
                } else {
                    (b, 0.5)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trial {
    pub t: f64,
    pub phi: f64,
    pub dphi: f64,
    pub armijo: bool,
    pub curvature: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineSearchTrace {
    pub trials: Vec<Trial>,
    pub accepted: Option<f64>,
    pub curve: Vec<[f64; 2]>,
    pub phi0: f64,
    pub dphi0: f64,
}

pub fn line_search_trace(profile: Profile, c1: f64, c2: f64) -> Result<LineSearchTrace, String> {
    if !(0.0 < c1 && c1 < c2 && c2 < 1.0) {
        return Err("need 0 < c1 < c2 < 1".into());
    }
    let (phi0, dphi0) = profile.eval(0.0);
    let mut trials = Vec::new();
    let params = WolfeParams { c1, c2, max_evals: 30 };
    let result = weak_wolfe(phi0, dphi0, &params, |t| {
        let (phi, dphi) = profile.eval(t);
        trials.push(Trial {
            t,
            phi,
            dphi,
            armijo: phi <= phi0 + c1 * t * dphi0,
            curvature: dphi >= c2 * dphi0,
        });
        Some((phi, dphi, ()))
    });
    let curve = (0..=200).map(|i| i as f64 * 0.025).map(|t| [t, profile.eval(t).0]).collect();
    Ok(LineSearchTrace { trials, accepted: result.ok().map(|a| a.t), curve, phi0, dphi0 })
}

#[derive(Debug, Clone, Serialize)]
pub struct MinNorm {
    pub sigma: Vec<f64>,
    pub point: [f64; 2],
    pub norm: f64,
}

/// Shortest vector in the convex hull of the 2-D vectors `g = [x₀, y₀, x₁, y₁, …]`.
pub fn min_norm(g: &[f64]) -> Result<MinNorm, String> {
    if g.is_empty() || !g.len().is_multiple_of(2) {
        return Err("expected a nonempty list of (x, y) pairs".into());
    }
    let m = DMatrix::from_column_slice(2, g.len() / 2, g);
    let sol = solve_simplex_qp(&m, &QpSettings::default()).map_err(|e| e.to_string())?;
    let p = &m * &sol.sigma;
    Ok(MinNorm { sigma: sol.sigma.as_slice().to_vec(), point: [p[0], p[1]], norm: sol.value })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = solveDisk)]
pub fn solve_disk(cx: f64, cy: f64, x0: f64, y0: f64) -> Result<String, JsValue> {
    to_json(disk_trajectory([cx, cy], [x0, y0], 200))
}

#[wasm_bindgen(js_name = lineSearch)]
pub fn line_search(profile: &str, c1: f64, c2: f64) -> Result<String, JsValue> {
    to_json(Profile::parse(profile).and_then(|p| line_search_trace(p, c1, c2)))
}

#[wasm_bindgen(js_name = minNorm)]
pub fn min_norm_js(g: Vec<f64>) -> Result<String, JsValue> {
    to_json(min_norm(&g))
}
