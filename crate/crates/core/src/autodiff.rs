//! Reverse-mode automatic differentiation over a small set of tensor operations.
//!
//! A [`Tape`] records every primitive applied to traced values ([`Var`]).
//! Nodes only ever reference earlier nodes, so a single reverse sweep
//! accumulates adjoints. Nondifferentiable points use fixed conventions:
//!
//! * `sign(0) = 0`, so `|x|` and `‖x‖₁` contribute a zero subgradient at 0;
//! * `relu'(0) = 0`;
//! * `max(a, b)` routes the whole adjoint to `a` on ties;
//! * `‖x‖₂` has a zero gradient at `x = 0`.

use std::cell::RefCell;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::tensor::{self, sign, Tensor};
use crate::varspace::{FlatVector, VarSpace, VarSpaceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdError {
    #[error("non-finite value produced by `{op}`")]
    NonFiniteValue { op: &'static str },
    #[error("unsupported operation: {0}")]
    UnsupportedOp(String),
    #[error("unknown output node {0}")]
    UnknownOutput(usize),
    #[error("output node {0} is not a scalar")]
    NonScalarOutput(usize),
    #[error(transparent)]
    VarSpace(#[from] VarSpaceError),
}

pub type NodeId = usize;

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    Const,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Neg(NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Shift(NodeId),
    MatMul { a: NodeId, b: NodeId, r: usize, k: usize, c: usize },
    Transpose { a: NodeId, r: usize, c: usize },
    Reshape(NodeId),
    Sum(NodeId),
    Dot(NodeId, NodeId),
    Abs(NodeId),
    Sign(NodeId),
    Relu(NodeId),
    Max(NodeId, NodeId),
    Norm1(NodeId),
    Norm2(NodeId),
    Norm2Sq(NodeId),
    Index(NodeId, usize),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Const => "const",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Neg(_) => "neg",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Shift(_) => "shift",
            Op::MatMul { .. } => "matmul",
            Op::Transpose { .. } => "transpose",
            Op::Reshape(_) => "reshape",
            Op::Sum(_) => "sum",
            Op::Dot(..) => "dot",
            Op::Abs(_) => "abs",
            Op::Sign(_) => "sign",
            Op::Relu(_) => "relu",
            Op::Max(..) => "max",
            Op::Norm1(_) => "norm1",
            Op::Norm2(_) => "norm2",
            Op::Norm2Sq(_) => "norm2_sq",
            Op::Index(..) => "index",
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Append-only record of a tensor program.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    // (node, offset into the flat vector)
    leaves: RefCell<Vec<(NodeId, usize)>>,
    flat_len: RefCell<usize>,
    error: RefCell<Option<AdError>>,
}

/// A traced tensor living on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: NodeId,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}", self.id)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    /// First error raised while recording, if any.
    pub fn error(&self) -> Option<AdError> {
        self.error.borrow().clone()
    }

    fn fail(&self, err: AdError) {
        let mut slot = self.error.borrow_mut();
        if slot.is_none() {
            *slot = Some(err);
        }
    }

    fn push(&self, op: Op, value: Tensor) -> Var<'_> {
        if !value.is_finite() {
            self.fail(AdError::NonFiniteValue { op: op.name() });
        }
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { op, value });
        Var { tape: self, id: nodes.len() - 1 }
    }

    /// Records an invalid operation; the placeholder result keeps the
    /// program running so the error can be reported once it returns.
    fn invalid(&self, msg: String) -> Var<'_> {
        self.fail(AdError::UnsupportedOp(msg));
        self.push(Op::Const, Tensor::scalar(0.0))
    }

    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push(Op::Const, value)
    }

    pub fn scalar(&self, v: f64) -> Var<'_> {
        self.constant(Tensor::scalar(v))
    }

    /// Registers every variable of `space` as a differentiable leaf.
    pub fn variables(&self, space: &VarSpace, x: &FlatVector) -> Result<TracedVars<'_>, AdError> {
        let structs = space.unpack(x)?;
        *self.flat_len.borrow_mut() = space.total_dim();
        let mut vars = Vec::with_capacity(space.entries().len());
        for entry in space.entries() {
            let v = self.push(Op::Leaf, structs[&entry.name].clone());
            self.leaves.borrow_mut().push((v.id, entry.offset()));
            vars.push((entry.name.clone(), v));
        }
        Ok(TracedVars { tape: self, vars })
    }

    pub fn value(&self, id: NodeId) -> Option<Tensor> {
        self.nodes.borrow().get(id).map(|n| n.value.clone())
    }

    /// Gradient of the scalar node `output` with respect to all leaves,
    /// packed into a flat vector.
    pub fn backward(&self, output: NodeId) -> Result<FlatVector, AdError> {
        self.vjp(output, &Tensor::scalar(1.0))
    }

    /// Vector-Jacobian product: propagates `seed` (shaped like `output`) to the leaves.
    pub fn vjp(&self, output: NodeId, seed: &Tensor) -> Result<FlatVector, AdError> {
        let nodes = self.nodes.borrow();
        let out = nodes.get(output).ok_or(AdError::UnknownOutput(output))?;
        if seed.len() != out.value.len() {
            return Err(if out.value.len() == 1 {
                AdError::UnsupportedOp("seed shape does not match output".into())
            } else {
                AdError::NonScalarOutput(output)
            });
        }
        let mut adj: Vec<Option<Tensor>> = vec![None; output + 1];
        adj[output] = Some(seed.reshaped(out.value.shape()));

        for id in (0..=output).rev() {
            let Some(g) = adj[id].take() else { continue };
            let node = &nodes[id];
            match node.op {
                Op::Leaf => {
                    adj[id] = Some(g);
                    continue;
                }
                Op::Const => {}
                Op::Add(a, b) => {
                    accumulate(&mut adj, &nodes, a, g.clone());
                    accumulate(&mut adj, &nodes, b, g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adj, &nodes, b, g.map(|v| -v));
                    accumulate(&mut adj, &nodes, a, g);
                }
                Op::Neg(a) => accumulate(&mut adj, &nodes, a, g.map(|v| -v)),
                Op::Mul(a, b) => {
                    let ga = g.zip(&nodes[b].value, |g, y| g * y);
                    let gb = g.zip(&nodes[a].value, |g, x| g * x);
                    accumulate(&mut adj, &nodes, a, ga);
                    accumulate(&mut adj, &nodes, b, gb);
                }
                Op::Scale(a, c) => accumulate(&mut adj, &nodes, a, g.map(|v| c * v)),
                Op::Shift(a) => accumulate(&mut adj, &nodes, a, g),
                Op::MatMul { a, b, r, k, c } => {
                    let av = nodes[a].value.data();
                    let bv = nodes[b].value.data();
                    // dA = G Bᵀ, dB = Aᵀ G
                    let bt = tensor::transpose(bv, k, c);
                    let da = tensor::matmul(g.data(), &bt, r, c, k);
                    let at = tensor::transpose(av, r, k);
                    let db = tensor::matmul(&at, g.data(), k, r, c);
                    accumulate(&mut adj, &nodes, a, Tensor::vector(da));
                    accumulate(&mut adj, &nodes, b, Tensor::vector(db));
                }
                Op::Transpose { a, r, c } => {
                    // forward mapped (r x c) -> (c x r)
                    let back = tensor::transpose(g.data(), c, r);
                    accumulate(&mut adj, &nodes, a, Tensor::vector(back));
                }
                Op::Reshape(a) => accumulate(&mut adj, &nodes, a, g),
                Op::Sum(a) => {
                    let gv = g.data()[0];
                    accumulate(&mut adj, &nodes, a, nodes[a].value.map(|_| gv));
                }
                Op::Dot(a, b) => {
                    let gv = g.data()[0];
                    let ga = nodes[b].value.map(|y| gv * y);
                    let gb = nodes[a].value.map(|x| gv * x);
                    accumulate(&mut adj, &nodes, a, ga);
                    accumulate(&mut adj, &nodes, b, gb);
                }
                Op::Abs(a) => {
                    let ga = g.zip(&nodes[a].value, |g, x| g * sign(x));
                    accumulate(&mut adj, &nodes, a, ga);
                }
                Op::Sign(a) => {
                    let zero = nodes[a].value.map(|_| 0.0);
                    accumulate(&mut adj, &nodes, a, zero);
                }
                Op::Relu(a) => {
                    let ga = g.zip(&nodes[a].value, |g, x| if x > 0.0 { g } else { 0.0 });
                    accumulate(&mut adj, &nodes, a, ga);
                }
                Op::Max(a, b) => {
                    let av = &nodes[a].value;
                    let bv = &nodes[b].value;
                    let mut ga = g.clone();
                    let mut gb = g;
                    for i in 0..ga.len() {
                        if av.data()[i] >= bv.data()[i] {
                            gb.data_mut()[i] = 0.0;
                        } else {
                            ga.data_mut()[i] = 0.0;
                        }
                    }
                    accumulate(&mut adj, &nodes, a, ga);
                    accumulate(&mut adj, &nodes, b, gb);
                }
                Op::Norm1(a) => {
                    let gv = g.data()[0];
                    accumulate(&mut adj, &nodes, a, nodes[a].value.map(|x| gv * sign(x)));
                }
                Op::Norm2(a) => {
                    let gv = g.data()[0];
                    let norm = node.value.data()[0];
                    let ga = if norm == 0.0 {
                        nodes[a].value.map(|_| 0.0)
                    } else {
                        nodes[a].value.map(|x| gv * (x / norm))
                    };
                    accumulate(&mut adj, &nodes, a, ga);
                }
                Op::Norm2Sq(a) => {
                    let gv = g.data()[0];
                    accumulate(&mut adj, &nodes, a, nodes[a].value.map(|x| gv * (x + x)));
                }
                Op::Index(a, i) => {
                    let mut ga = nodes[a].value.map(|_| 0.0);
                    ga.data_mut()[i] = g.data()[0];
                    accumulate(&mut adj, &nodes, a, ga);
                }
            }
        }

        let mut grad = FlatVector::zeros(*self.flat_len.borrow());
        for &(leaf, offset) in self.leaves.borrow().iter() {
            if let Some(Some(g)) = adj.get(leaf) {
                for (k, v) in g.data().iter().enumerate() {
                    grad[offset + k] = *v;
                }
            }
        }
        Ok(grad)
    }
}

fn accumulate(adj: &mut [Option<Tensor>], nodes: &[Node], id: NodeId, g: Tensor) {
    let g = g.reshaped(nodes[id].value.shape());
    match &mut adj[id] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

/// Named traced variables handed to a [`TensorProgram`].
pub struct TracedVars<'t> {
    tape: &'t Tape,
    vars: Vec<(String, Var<'t>)>,
}

impl<'t> TracedVars<'t> {
    /// Looks up a variable by name. An unknown name is recorded as an error on
    /// the tape and yields a zero placeholder.
    pub fn get(&self, name: &str) -> Var<'t> {
        match self.vars.iter().find(|(n, _)| n == name) {
            Some((_, v)) => *v,
            None => self.tape.invalid(format!("unknown variable `{name}`")),
        }
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }
}

impl<'t> Var<'t> {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Tensor {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    /// First element of the value; convenient for scalar outputs.
    pub fn item(&self) -> f64 {
        self.tape.nodes.borrow()[self.id].value.data()[0]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape().to_vec()
    }

    fn unary(self, op: Op, f: impl Fn(&Tensor) -> Tensor) -> Var<'t> {
        let v = f(&self.tape.nodes.borrow()[self.id].value);
        self.tape.push(op, v)
    }

    fn binary(self, other: Var<'t>, name: &str, op: Op, f: impl Fn(f64, f64) -> f64) -> Var<'t> {
        let v = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id].value, &nodes[other.id].value);
            let compatible = a.shape() == b.shape() || (a.len() == 1 && b.len() == 1);
            if !compatible {
                let msg = format!("{name} of shapes {:?} and {:?}", a.shape(), b.shape());
                drop(nodes);
                return self.tape.invalid(msg);
            }
            a.zip(b, f)
        };
        self.tape.push(op, v)
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        self.unary(Op::Scale(self.id, c), |t| t.map(|x| c * x))
    }

    /// Adds a constant to every element.
    pub fn shift(self, c: f64) -> Var<'t> {
        self.unary(Op::Shift(self.id), |t| t.map(|x| x + c))
    }

    pub fn matmul(self, other: Var<'t>) -> Var<'t> {
        let v = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id].value, &nodes[other.id].value);
            match (a.as_matrix_dims(), b.as_matrix_dims()) {
                (Some((r, k)), Some((k2, c))) if k == k2 => {
                    let out = tensor::matmul(a.data(), b.data(), r, k, c);
                    Ok((Tensor::matrix(r, c, out), r, k, c))
                }
                _ => Err(format!("matmul of shapes {:?} and {:?}", a.shape(), b.shape())),
            }
        };
        match v {
            Ok((t, r, k, c)) => self.tape.push(Op::MatMul { a: self.id, b: other.id, r, k, c }, t),
            Err(msg) => self.tape.invalid(msg),
        }
    }

    /// Matrix transpose; a vector of shape `[n]` becomes a `[1, n]` row.
    #[allow(clippy::should_implement_trait)]
    pub fn t(self) -> Var<'t> {
        let dims = self.tape.nodes.borrow()[self.id].value.as_matrix_dims();
        match dims {
            Some((r, c)) => self.unary(Op::Transpose { a: self.id, r, c }, |t| {
                Tensor::matrix(c, r, tensor::transpose(t.data(), r, c))
            }),
            None => self.tape.invalid(format!("transpose of shape {:?}", self.shape())),
        }
    }

    pub fn reshape(self, shape: &[usize]) -> Var<'t> {
        if shape.iter().product::<usize>() != self.tape.nodes.borrow()[self.id].value.len() {
            return self.tape.invalid(format!("reshape {:?} -> {shape:?}", self.shape()));
        }
        self.unary(Op::Reshape(self.id), |t| t.reshaped(shape))
    }

    pub fn sum(self) -> Var<'t> {
        self.unary(Op::Sum(self.id), |t| Tensor::scalar(t.data().iter().sum()))
    }

    pub fn dot(self, other: Var<'t>) -> Var<'t> {
        let v = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id].value, &nodes[other.id].value);
            (a.len() == b.len()).then(|| {
                Tensor::scalar(a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum())
            })
        };
        match v {
            Some(t) => self.tape.push(Op::Dot(self.id, other.id), t),
            None => self.tape.invalid("dot of unequal lengths".into()),
        }
    }

    pub fn abs(self) -> Var<'t> {
        self.unary(Op::Abs(self.id), |t| t.map(f64::abs))
    }

    pub fn sign(self) -> Var<'t> {
        self.unary(Op::Sign(self.id), |t| t.map(sign))
    }

    pub fn relu(self) -> Var<'t> {
        self.unary(Op::Relu(self.id), |t| t.map(|x| if x > 0.0 { x } else { 0.0 }))
    }

    /// Elementwise maximum; ties select `self`.
    pub fn max(self, other: Var<'t>) -> Var<'t> {
        self.binary(other, "max", Op::Max(self.id, other.id), |a, b| if a >= b { a } else { b })
    }

    pub fn norm1(self) -> Var<'t> {
        self.unary(Op::Norm1(self.id), |t| Tensor::scalar(t.data().iter().map(|x| x.abs()).sum()))
    }

    pub fn norm2(self) -> Var<'t> {
        self.unary(Op::Norm2(self.id), |t| {
            Tensor::scalar(t.data().iter().map(|x| x * x).sum::<f64>().sqrt())
        })
    }

    pub fn norm2_sq(self) -> Var<'t> {
        self.unary(Op::Norm2Sq(self.id), |t| Tensor::scalar(t.data().iter().map(|x| x * x).sum()))
    }

    /// Selects element `i` (row-major) as a scalar.
    pub fn at(self, i: usize) -> Var<'t> {
        if i >= self.tape.nodes.borrow()[self.id].value.len() {
            return self.tape.invalid(format!("index {i} out of range for {:?}", self.shape()));
        }
        self.unary(Op::Index(self.id, i), |t| Tensor::scalar(t.data()[i]))
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, "add", Op::Add(self.id, rhs.id), |a, b| a + b)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, "sub", Op::Sub(self.id, rhs.id), |a, b| a - b)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, "mul", Op::Mul(self.id, rhs.id), |a, b| a * b)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(Op::Neg(self.id), |t| t.map(|x| -x))
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Var<'t> {
        self.shift(rhs)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Var<'t> {
        self.shift(-rhs)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Var<'t> {
        self.scale(rhs)
    }
}

impl<'t> Mul<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        rhs.scale(self)
    }
}

/// The scalars a program returns: objective, inequality and equality constraints.
pub struct ProgramOutput<'t> {
    pub f: Var<'t>,
    pub ci: Vec<Var<'t>>,
    pub ce: Vec<Var<'t>>,
}

impl<'t> ProgramOutput<'t> {
    pub fn objective(f: Var<'t>) -> Self {
        Self { f, ci: Vec::new(), ce: Vec::new() }
    }
}

/// A pure function from traced variables to objective and constraint values.
pub trait TensorProgram: Send + Sync {
    fn eval<'t>(&self, vars: &TracedVars<'t>) -> ProgramOutput<'t>;
}

/// Adapts a closure into a [`TensorProgram`].
pub struct FnProgram<F>(F);

impl<F> TensorProgram for FnProgram<F>
where
    F: for<'t> Fn(&TracedVars<'t>) -> ProgramOutput<'t> + Send + Sync,
{
    fn eval<'t>(&self, vars: &TracedVars<'t>) -> ProgramOutput<'t> {
        (self.0)(vars)
    }
}

pub fn program_fn<F>(f: F) -> FnProgram<F>
where
    F: for<'t> Fn(&TracedVars<'t>) -> ProgramOutput<'t> + Send + Sync,
{
    FnProgram(f)
}

/// Objective and constraint values at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Values {
    pub f: f64,
    pub ci: Vec<f64>,
    pub ce: Vec<f64>,
}

/// A recorded evaluation: values, the tape, and the node ids of each output.
#[derive(Debug)]
pub struct Recording {
    pub values: Values,
    pub tape: Tape,
    pub f: NodeId,
    pub ci: Vec<NodeId>,
    pub ce: Vec<NodeId>,
}

impl Recording {
    /// Output node ids in the order objective, inequalities, equalities.
    pub fn outputs(&self) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::once(self.f).chain(self.ci.iter().copied()).chain(self.ce.iter().copied())
    }
}

/// Runs `prog` at `x`, recording every primitive on a fresh tape.
pub fn evaluate_and_record(
    prog: &dyn TensorProgram,
    space: &VarSpace,
    x: &FlatVector,
) -> Result<Recording, AdError> {
    let tape = Tape::new();
    let (f, ci, ce) = {
        let vars = tape.variables(space, x)?;
        let out = prog.eval(&vars);
        let f = out.f.id;
        let ci: Vec<NodeId> = out.ci.iter().map(|v| v.id).collect();
        let ce: Vec<NodeId> = out.ce.iter().map(|v| v.id).collect();
        (f, ci, ce)
    };
    if let Some(err) = tape.error() {
        return Err(err);
    }
    let scalar = |id: NodeId| -> Result<f64, AdError> {
        let v = tape.value(id).ok_or(AdError::UnknownOutput(id))?;
        if v.len() != 1 {
            return Err(AdError::NonScalarOutput(id));
        }
        Ok(v.data()[0])
    };
    let values = Values {
        f: scalar(f)?,
        ci: ci.iter().map(|&i| scalar(i)).collect::<Result<_, _>>()?,
        ce: ce.iter().map(|&i| scalar(i)).collect::<Result<_, _>>()?,
    };
    Ok(Recording { values, tape, f, ci, ce })
}

/// Relative disagreement between AD gradients and central differences for
/// each output (`f`, then `ci`, then `ce`), maximized over coordinates:
/// `|ad - cd| / max(1, |cd|)`.
pub fn gradient_errors(
    prog: &dyn TensorProgram,
    space: &VarSpace,
    x: &FlatVector,
    h: f64,
) -> Result<Vec<f64>, AdError> {
    let rec = evaluate_and_record(prog, space, x)?;
    let grads: Vec<FlatVector> =
        rec.outputs().map(|id| rec.tape.backward(id)).collect::<Result<_, _>>()?;
    let flatten = |v: &Values| -> Vec<f64> {
        std::iter::once(v.f).chain(v.ci.iter().copied()).chain(v.ce.iter().copied()).collect()
    };
    let mut worst = vec![0.0f64; grads.len()];
    let mut xp = x.clone();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let plus = flatten(&evaluate_and_record(prog, space, &xp)?.values);
        xp[i] = x[i] - h;
        let minus = flatten(&evaluate_and_record(prog, space, &xp)?.values);
        xp[i] = x[i];
        for (k, g) in grads.iter().enumerate() {
            let cd = (plus[k] - minus[k]) / (2.0 * h);
            worst[k] = worst[k].max((g[i] - cd).abs() / cd.abs().max(1.0));
        }
    }
    Ok(worst)
}

/// Largest entry of [`gradient_errors`].
pub fn gradient_check(
    prog: &dyn TensorProgram,
    space: &VarSpace,
    x: &FlatVector,
    h: f64,
) -> Result<f64, AdError> {
    Ok(gradient_errors(prog, space, x, h)?.into_iter().fold(0.0, f64::max))
}
