//! Small problems with known solutions, each with analytic gradients.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix_tensor;
use crate::autodiff::{program_fn, ProgramOutput};
use crate::problem::{AnalyticOutput, Problem};
use crate::rng::seeded;
use crate::tensor::{sign, Tensor};
use crate::varspace::{FlatVector, VarSpace, VarStruct};

const L1_FIT_SEED: u64 = 42;

#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub name: &'static str,
    pub problem: Problem,
    pub x0: VarStruct,
    pub f_star: f64,
    pub x_star: Vec<f64>,
}

fn x_struct(v: Vec<f64>) -> VarStruct {
    VarStruct::from([("x".to_string(), Tensor::vector(v))])
}

fn space(n: usize) -> VarSpace {
    VarSpace::new([("x", vec![n])]).expect("valid space")
}

/// Weighted quadratic `Σ dᵢ(xᵢ − aᵢ)²` with weights from 1 to 100.
pub fn quadratic() -> SuiteEntry {
    let n = 10;
    let d: Vec<f64> = (0..n).map(|i| 100f64.powf(i as f64 / (n - 1) as f64)).collect();
    let a = vec![1.0, -0.5, 0.25, 2.0, -1.0, 0.0, 1.5, -2.0, 0.5, 3.0];
    let (dt, at) = (Tensor::vector(d.clone()), Tensor::vector(a.clone()));
    let program = program_fn(move |v| {
        let tape = v.tape();
        let r = v.get("x") - tape.constant(at.clone());
        ProgramOutput::objective((tape.constant(dt.clone()) * r * r).sum())
    });
    let (dv, av) = (DVector::from_vec(d), DVector::from_vec(a.clone()));
    let analytic = move |x: &FlatVector| {
        let r = x - &av;
        AnalyticOutput {
            f: dv.component_mul(&r).dot(&r),
            grad_f: dv.component_mul(&r) * 2.0,
            ci: vec![],
            grad_ci: vec![],
            ce: vec![],
            grad_ce: vec![],
        }
    };
    SuiteEntry {
        name: "quadratic",
        problem: Problem::new(space(n), program, 0, 0).with_analytic(analytic),
        x0: x_struct(vec![0.0; n]),
        f_star: 0.0,
        x_star: a,
    }
}

/// `min ‖x − (2,2)‖²  s.t.  ‖x‖² ≤ 1`, started outside the disk.
pub fn disk() -> SuiteEntry {
    let program = program_fn(|v| {
        let x = v.get("x");
        let c = v.tape().constant(Tensor::vector(vec![2.0, 2.0]));
        ProgramOutput { f: (x - c).norm2_sq(), ci: vec![x.norm2_sq() - 1.0], ce: vec![] }
    });
    let analytic = |x: &FlatVector| {
        let r = x - FlatVector::from_vec(vec![2.0, 2.0]);
        AnalyticOutput {
            f: r.norm_squared(),
            grad_f: r * 2.0,
            ci: vec![x.norm_squared() - 1.0],
            grad_ci: vec![x * 2.0],
            ce: vec![],
            grad_ce: vec![],
        }
    };
    let h = 0.5f64.sqrt();
    SuiteEntry {
        name: "disk",
        problem: Problem::new(space(2), program, 1, 0).with_analytic(analytic),
        x0: x_struct(vec![0.0, -1.5]),
        f_star: (2.0 * 2f64.sqrt() - 1.0).powi(2),
        x_star: vec![h, h],
    }
}

/// `min ‖Ax − b‖₁` for a seeded `A = I + 0.5·G`; the optimum fits exactly.
pub fn l1_fit() -> SuiteEntry {
    let n = 4;
    let mut rng = seeded(L1_FIT_SEED);
    let a = DMatrix::from_fn(n, n, |i, j| 0.5 * rng.sample::<f64, _>(StandardNormal) + if i == j { 1.0 } else { 0.0 });
    let b = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x_star = a.clone().lu().solve(&b).expect("nonsingular");
    let (at, bt) = (matrix_tensor(&a), Tensor::matrix(n, 1, b.as_slice().to_vec()));
    let program = program_fn(move |v| {
        let tape = v.tape();
        let r = tape.constant(at.clone()).matmul(v.get("x")) - tape.constant(bt.clone());
        ProgramOutput::objective(r.norm1())
    });
    let analytic = move |x: &FlatVector| {
        let r = &a * x - &b;
        AnalyticOutput {
            f: r.iter().map(|v| v.abs()).sum(),
            grad_f: a.tr_mul(&r.map(sign)),
            ci: vec![],
            grad_ci: vec![],
            ce: vec![],
            grad_ce: vec![],
        }
    };
    SuiteEntry {
        name: "l1_fit",
        problem: Problem::new(space(n), program, 0, 0).with_analytic(analytic),
        x0: x_struct(vec![0.0; n]),
        f_star: 0.0,
        x_star: x_star.as_slice().to_vec(),
    }
}

/// `min x₁ + x₂  s.t.  x₁² + x₂² = 1`.
pub fn circle_linear() -> SuiteEntry {
    let program = program_fn(|v| {
        let x = v.get("x");
        ProgramOutput { f: x.sum(), ci: vec![], ce: vec![x.norm2_sq() - 1.0] }
    });
    let analytic = |x: &FlatVector| AnalyticOutput {
        f: x.sum(),
        grad_f: FlatVector::from_element(2, 1.0),
        ci: vec![],
        grad_ci: vec![],
        ce: vec![x.norm_squared() - 1.0],
        grad_ce: vec![x * 2.0],
    };
    let h = 0.5f64.sqrt();
    SuiteEntry {
        name: "circle_linear",
        problem: Problem::new(space(2), program, 0, 1).with_analytic(analytic),
        x0: x_struct(vec![0.8, 0.6]),
        f_star: -(2f64.sqrt()),
        x_star: vec![-h, -h],
    }
}

pub fn analytic_suite() -> Vec<SuiteEntry> {
    vec![quadratic(), disk(), l1_fit(), circle_linear()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optima_are_consistent() {
        for e in analytic_suite() {
            let x = FlatVector::from_vec(e.x_star.clone());
            for mode in [crate::problem::GradientMode::Autodiff, crate::problem::GradientMode::Analytic] {
                let ev = e.problem.clone().with_mode(mode).unwrap().eval_all(&x).unwrap();
                assert!((ev.f - e.f_star).abs() <= 1e-12 * (1.0 + e.f_star.abs()), "{} {}", e.name, ev.f);
                assert!(ev.v_max <= 1e-12, "{}", e.name);
            }
        }
    }

    #[test]
    fn gradients_agree_at_start() {
        for e in analytic_suite() {
            let x = e.problem.space().pack(&e.x0).unwrap();
            let ad = e.problem.eval_autodiff(&x).unwrap();
            let an = e.problem.eval_analytic(&x).unwrap();
            assert!((ad.grad_f - an.grad_f).amax() < 1e-12, "{}", e.name);
            assert!((ad.grad_ci - an.grad_ci).amax() < 1e-12, "{}", e.name);
            assert!((ad.grad_ce - an.grad_ce).amax() < 1e-12, "{}", e.name);
        }
    }
}
