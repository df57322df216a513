//! Orthogonal dictionary learning: `min (1/m)‖qᵀY‖₁  s.t.  qᵀq = 1`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{matrix_tensor, ExampleError};
use crate::autodiff::{program_fn, ProgramOutput};
use crate::problem::{AnalyticOutput, Problem};
use crate::rng::seeded;
use crate::tensor::sign;
use crate::varspace::{FlatVector, VarSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct OdlData {
    /// `n × m` observations, `Y = Q·X`.
    pub y: DMatrix<f64>,
    pub n: usize,
    pub m: usize,
    pub theta: f64,
    /// The orthogonal `Q`; used only for scoring.
    pub truth: DMatrix<f64>,
    /// The sparse codes `X`.
    pub codes: DMatrix<f64>,
}

/// Draws `Q` as the orthogonal factor of a Gaussian matrix (signs fixed so
/// that `R` has a positive diagonal) and `X` Bernoulli(θ)–Gaussian, in that
/// order, from one stream.
pub fn gen_odl_data(n: usize, m: usize, theta: f64, seed: u64) -> Result<OdlData, ExampleError> {
    if n == 0 || m < n {
        return Err(ExampleError::BadDimensions(format!("need 1 <= n <= m, got n={n}, m={m}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(ExampleError::BadParameter(format!("theta must lie in (0, 1), got {theta}")));
    }
    let mut rng = seeded(seed);
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut codes = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            if rng.random::<f64>() < theta {
                codes[(i, j)] = rng.sample(StandardNormal);
            }
        }
    }
    let y = &q * &codes;
    Ok(OdlData { y, n, m, theta, truth: q, codes })
}

pub fn odl_problem(data: &OdlData) -> Problem {
    let n = data.n;
    let inv_m = 1.0 / data.m as f64;
    let space = VarSpace::new([("q", vec![n, 1])]).expect("valid space");
    let y_tensor = matrix_tensor(&data.y);
    let program = program_fn(move |v| {
        let q = v.get("q");
        let y = v.tape().constant(y_tensor.clone());
        ProgramOutput { f: q.t().matmul(y).norm1().scale(inv_m), ci: vec![], ce: vec![q.t().matmul(q) - 1.0] }
    });
    let y = data.y.clone();
    // Mirrors the autodiff evaluation order so both paths agree bit for bit.
    let analytic = move |q: &FlatVector| {
        let m = y.ncols();
        let z: Vec<f64> = (0..m)
            .map(|j| {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += q[k] * y[(k, j)];
                }
                acc
            })
            .collect();
        let f = inv_m * z.iter().map(|x| x.abs()).sum::<f64>();
        let w: Vec<f64> = z.iter().map(|&x| inv_m * sign(x)).collect();
        let grad_f = FlatVector::from_fn(n, |k, _| {
            let mut acc = 0.0;
            for (j, wj) in w.iter().enumerate() {
                acc += wj * y[(k, j)];
            }
            acc
        });
        let mut qq = 0.0;
        for k in 0..n {
            qq += q[k] * q[k];
        }
        AnalyticOutput { f, grad_f, ci: vec![], grad_ci: vec![], ce: vec![qq - 1.0], grad_ce: vec![q + q] }
    };
    Problem::new(space, program, 0, 1).with_analytic(analytic)
}

/// True iff `q` is within `tol` of a signed column of the true dictionary
/// and lies on the sphere to 1e-6.
pub fn odl_success(q: &FlatVector, data: &OdlData, tol: f64) -> bool {
    let corr = data.truth.tr_mul(q).amax();
    corr >= 1.0 - tol && (q.norm_squared() - 1.0).abs() <= 1e-6
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::GradientMode;

    fn identity_data() -> OdlData {
        OdlData {
            y: DMatrix::identity(2, 2),
            n: 2,
            m: 2,
            theta: 0.5,
            truth: DMatrix::identity(2, 2),
            codes: DMatrix::identity(2, 2),
        }
    }

    #[test]
    fn identity_instance_values() {
        let p = odl_problem(&identity_data());
        for mode in [GradientMode::Autodiff, GradientMode::Analytic] {
            let e = p.clone().with_mode(mode).unwrap().eval_all(&FlatVector::from_vec(vec![1.0, 0.0])).unwrap();
            assert_eq!(e.f, 0.5);
            assert_eq!(e.grad_f.as_slice(), &[0.5, 0.0]);
            assert_eq!(e.ce, vec![0.0]);
            assert_eq!(e.grad_ce.as_slice(), &[2.0, 0.0]);
        }
        let e = p.eval_all(&FlatVector::zeros(2)).unwrap();
        assert_eq!((e.f, e.ce[0]), (0.0, -1.0));
    }

    #[test]
    fn bad_arguments() {
        assert!(matches!(gen_odl_data(5, 4, 0.3, 0), Err(ExampleError::BadDimensions(_))));
        assert!(matches!(gen_odl_data(5, 10, 1.0, 0), Err(ExampleError::BadParameter(_))));
    }

    #[test]
    fn success_boundaries() {
        let mut data = identity_data();
        data.n = 10;
        data.truth = DMatrix::identity(10, 10);
        let ones = FlatVector::from_element(10, 1.0 / 10f64.sqrt());
        assert!(!odl_success(&ones, &data, 1e-2));
        let e1 = FlatVector::from_fn(10, |i, _| if i == 0 { -1.0 } else { 0.0 });
        assert!(odl_success(&e1, &data, 1e-3));
        // correlation exactly 1 − tol, still on the sphere to 1e-6
        let c = 0.75;
        let s = (1.0f64 - c * c).sqrt();
        let q = FlatVector::from_fn(10, |i, _| match i {
            0 => c,
            1 => s,
            _ => 0.0,
        });
        assert!(odl_success(&q, &data, 1.0 - q[0]));
    }
}
