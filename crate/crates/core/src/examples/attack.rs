//! A desk-scale adversarial attack: push a small ReLU classifier off its
//! label while keeping a learned feature distance within a budget.
//!
//! `min −L(z(x̃), y)  s.t.  ‖φ(x) − φ(x̃)‖₂ − ε ≤ 0` with the margin loss
//! `L(z, y) = max_{i≠y} zᵢ − z_y`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{matrix_tensor, ExampleError};
use crate::autodiff::{program_fn, ProgramOutput, Var};
use crate::problem::Problem;
use crate::rng::{gaussian_vector, seeded, uniform_on_sphere};
use crate::tensor::Tensor;
use crate::varspace::VarSpace;

const CLASSIFIER_DIMS: [usize; 3] = [8, 16, 3];
const FEATURE_DIMS: [usize; 3] = [8, 8, 8];
const BIAS_SCALE: f64 = 0.1;
const MAX_DRAWS: usize = 1000;

/// A frozen feed-forward network: affine layers with ReLU between them and
/// a linear last layer.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyNet {
    layers: Vec<(DMatrix<f64>, DVector<f64>)>,
}

impl TinyNet {
    pub fn new(layers: Vec<(DMatrix<f64>, DVector<f64>)>) -> Result<Self, ExampleError> {
        if layers.is_empty() {
            return Err(ExampleError::BadDimensions("network has no layers".into()));
        }
        for (i, (w, b)) in layers.iter().enumerate() {
            if w.nrows() != b.len() {
                return Err(ExampleError::BadDimensions(format!("layer {i}: bias length {} != {}", b.len(), w.nrows())));
            }
            if i > 0 && layers[i - 1].0.nrows() != w.ncols() {
                return Err(ExampleError::BadDimensions(format!("layer {i} does not chain")));
            }
            if w.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                return Err(ExampleError::BadParameter(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(Self { layers })
    }

    /// Weights `N(0,1)/√fan_in`, biases `0.1·N(0,1)`, drawn layer by layer.
    pub fn random(dims: &[usize], rng: &mut impl Rng) -> Self {
        let layers = dims
            .windows(2)
            .map(|d| {
                let scale = 1.0 / (d[0] as f64).sqrt();
                let w = DMatrix::from_fn(d[1], d[0], |_, _| scale * rng.sample::<f64, _>(StandardNormal));
                let b = DVector::from_fn(d[1], |_, _| BIAS_SCALE * rng.sample::<f64, _>(StandardNormal));
                (w, b)
            })
            .collect();
        Self::new(layers).expect("chained dims")
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].0.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().0.nrows()
    }

    pub fn layers(&self) -> &[(DMatrix<f64>, DVector<f64>)] {
        &self.layers
    }

    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        let last = self.layers.len() - 1;
        let mut h = x.clone();
        for (i, (w, b)) in self.layers.iter().enumerate() {
            h = w * h + b;
            if i < last {
                h.apply(|v| *v = v.max(0.0));
            }
        }
        h
    }

    pub fn forward_traced<'t>(&self, x: Var<'t>) -> Var<'t> {
        let tape = x.tape();
        let last = self.layers.len() - 1;
        let mut h = x;
        for (i, (w, b)) in self.layers.iter().enumerate() {
            let w = tape.constant(matrix_tensor(w));
            let b = tape.constant(Tensor::matrix(b.len(), 1, b.as_slice().to_vec()));
            h = w.matmul(h) + b;
            if i < last {
                h = h.relu();
            }
        }
        h
    }
}

fn argmax(z: &DVector<f64>) -> usize {
    // first index on ties
    let mut best = 0;
    for i in 1..z.len() {
        if z[i] > z[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackInstance {
    pub x: DVector<f64>,
    pub y: usize,
    pub epsilon: f64,
    pub classifier: TinyNet,
    pub feature_net: TinyNet,
}

impl AttackInstance {
    pub fn new(
        x: DVector<f64>,
        y: usize,
        epsilon: f64,
        classifier: TinyNet,
        feature_net: TinyNet,
    ) -> Result<Self, ExampleError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(ExampleError::BadParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if classifier.input_dim() != x.len() || feature_net.input_dim() != x.len() {
            return Err(ExampleError::BadDimensions("network input does not match x".into()));
        }
        if y >= classifier.output_dim() || classifier.output_dim() < 2 {
            return Err(ExampleError::BadDimensions(format!("label {y} out of range")));
        }
        if argmax(&classifier.forward(&x)) != y {
            return Err(ExampleError::BadParameter("clean input is misclassified".into()));
        }
        Ok(Self { x, y, epsilon, classifier, feature_net })
    }

    /// Seeded instance: a classifier 8→16→3, a feature map 8→8→8, a label
    /// drawn uniformly and Gaussian inputs drawn until the classifier agrees.
    pub fn seeded(seed: u64, epsilon: f64) -> Result<Self, ExampleError> {
        let mut rng = seeded(seed);
        let classifier = TinyNet::random(&CLASSIFIER_DIMS, &mut rng);
        let feature_net = TinyNet::random(&FEATURE_DIMS, &mut rng);
        let y = rng.random_range(0..CLASSIFIER_DIMS[2]);
        for _ in 0..MAX_DRAWS {
            let x = gaussian_vector(&mut rng, CLASSIFIER_DIMS[0]);
            if argmax(&classifier.forward(&x)) == y {
                return Self::new(x, y, epsilon, classifier, feature_net);
            }
        }
        Err(ExampleError::NoCleanInput(MAX_DRAWS))
    }
}

/// `max_{i≠y} zᵢ − z_y` for the classifier logits at `x_tilde`.
pub fn attack_margin(inst: &AttackInstance, x_tilde: &DVector<f64>) -> f64 {
    let z = inst.classifier.forward(x_tilde);
    let other = (0..z.len()).filter(|&i| i != inst.y).map(|i| z[i]).fold(f64::NEG_INFINITY, f64::max);
    other - z[inst.y]
}

pub fn feature_distance(inst: &AttackInstance, x_tilde: &DVector<f64>) -> f64 {
    (inst.feature_net.forward(&inst.x) - inst.feature_net.forward(x_tilde)).norm()
}

pub fn toy_attack_problem(inst: &AttackInstance) -> Problem {
    let n = inst.x.len();
    let space = VarSpace::new([("x_tilde", vec![n])]).expect("valid space");
    let inst = inst.clone();
    let clean_features = inst.feature_net.forward(&inst.x);
    let program = program_fn(move |v| {
        let xt = v.get("x_tilde");
        let tape = v.tape();
        let z = inst.classifier.forward_traced(xt);
        let mut other: Option<Var<'_>> = None;
        for i in (0..inst.classifier.output_dim()).filter(|&i| i != inst.y) {
            let zi = z.at(i);
            other = Some(match other {
                None => zi,
                Some(o) => o.max(zi),
            });
        }
        let f = z.at(inst.y) - other.expect("at least two classes");
        let phi_x = tape.constant(Tensor::matrix(clean_features.len(), 1, clean_features.as_slice().to_vec()));
        let dist = (phi_x - inst.feature_net.forward_traced(xt)).norm2();
        ProgramOutput { f, ci: vec![dist - inst.epsilon], ce: vec![] }
    });
    Problem::new(space, program, 1, 0)
}

/// Searches for a feasible point with positive margin by walking rays from
/// `x` in steps of `resolution`: every signed coordinate axis plus
/// `n_random` seeded random directions, out to radius `max_radius`.
pub fn attack_oracle(
    inst: &AttackInstance,
    resolution: f64,
    max_radius: f64,
    n_random: usize,
    seed: u64,
) -> Option<DVector<f64>> {
    let n = inst.x.len();
    let mut rng = seeded(seed);
    let mut dirs = Vec::with_capacity(2 * n + n_random);
    for i in 0..n {
        for s in [1.0, -1.0] {
            dirs.push(DVector::from_fn(n, |j, _| if j == i { s } else { 0.0 }));
        }
    }
    dirs.extend((0..n_random).map(|_| uniform_on_sphere(&mut rng, n)));
    let steps = (max_radius / resolution).ceil() as usize;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for d in &dirs {
        for k in 1..=steps {
            let p = &inst.x + d * (k as f64 * resolution);
            if feature_distance(inst, &p) > inst.epsilon {
                continue;
            }
            let l = attack_margin(inst, &p);
            if l > 0.0 && best.as_ref().is_none_or(|(b, _)| l > *b) {
                best = Some((l, p));
            }
        }
    }
    best.map(|(_, p)| p)
}

/// The first `count` seeded instances (seeds `seed, seed+1, …`) for which
/// [`attack_oracle`] finds a feasible misclassified point.
pub fn attack_instances(count: usize, epsilon: f64, seed: u64) -> Vec<(u64, AttackInstance)> {
    let mut out = Vec::with_capacity(count);
    let mut s = seed;
    while out.len() < count {
        if let Ok(inst) = AttackInstance::seeded(s, epsilon) {
            if attack_oracle(&inst, 1e-2, 3.0, 64, s).is_some() {
                out.push((s, inst));
            }
        }
        s += 1;
    }
    out
}
