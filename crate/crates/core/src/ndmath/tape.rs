//! Define-by-run reverse-mode differentiation over dense matrices.
//!
//! Every operation appends a node holding its value and the ids of its
//! inputs. Node ids are handed out in push order, so a reverse scan of the
//! node list is a valid reverse topological order and `backward` visits each
//! node exactly once. A tape is rebuilt for every training step.

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Clamp used by `log2eps`, `reciprocal_eps`, `div_eps` and the sqrt derivative.
pub const EPS: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnaryOp {
    Relu,
    Sigmoid,
    Softplus,
    Exp,
    Sqrt,
    /// `log2(max(x, EPS))`
    Log2Eps,
    Negate,
    Square,
    /// `1 / max(x, EPS)`
    ReciprocalEps,
    Scale(f64),
    AddScalar(f64),
    /// `max(x, lo)`
    ClampMin(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    /// Division with `|b|` clamped to at least `EPS`, sign preserved (0 counts as positive).
    DivEps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    SumAll,
    RowSum,
    ColSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Broadcast {
    Same,
    Row,
    Col,
    Scalar,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Unary(UnaryOp, Var),
    Binary(BinaryOp, Broadcast, Var, Var),
    Reduce(ReduceOp, Var),
    RowSoftmax(Var),
    Transpose(Var),
    Row(Var, usize),
    Column(Var, usize),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Recorded computation.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar output with respect to every node on the tape.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for `v`, or `None` when `v` does not influence the output.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient for `v`, with zeros substituted when it is disconnected.
    pub fn get_or_zeros(&self, v: Var, shape: (usize, usize)) -> Tensor {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(shape.0, shape.1))
    }
}

fn clamp_sign(b: f64) -> f64 {
    if b.abs() >= EPS {
        b
    } else if b < 0.0 {
        -EPS
    } else {
        EPS
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    // ln(1 + e^x) without overflow
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl UnaryOp {
    fn apply(self, x: f64) -> f64 {
        match self {
            UnaryOp::Relu => x.max(0.0),
            UnaryOp::Sigmoid => sigmoid(x),
            UnaryOp::Softplus => softplus(x),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Sqrt => x.sqrt(),
            UnaryOp::Log2Eps => x.max(EPS).log2(),
            UnaryOp::Negate => -x,
            UnaryOp::Square => x * x,
            UnaryOp::ReciprocalEps => 1.0 / x.max(EPS),
            UnaryOp::Scale(c) => c * x,
            UnaryOp::AddScalar(c) => x + c,
            UnaryOp::ClampMin(lo) => x.max(lo),
        }
    }

    /// Local derivative given input `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            UnaryOp::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            UnaryOp::Sigmoid => y * (1.0 - y),
            UnaryOp::Softplus => sigmoid(x),
            UnaryOp::Exp => y,
            UnaryOp::Sqrt => 0.5 / y.max(EPS),
            UnaryOp::Log2Eps => {
                if x > EPS {
                    1.0 / (x * std::f64::consts::LN_2)
                } else {
                    0.0
                }
            }
            UnaryOp::Negate => -1.0,
            UnaryOp::Square => 2.0 * x,
            UnaryOp::ReciprocalEps => {
                if x > EPS {
                    -1.0 / (x * x)
                } else {
                    0.0
                }
            }
            UnaryOp::Scale(c) => c,
            UnaryOp::AddScalar(_) => 1.0,
            UnaryOp::ClampMin(lo) => {
                if x > lo {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl BinaryOp {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::DivEps => a / clamp_sign(b),
        }
    }

    /// Partials (d/da, d/db).
    fn partials(self, a: f64, b: f64) -> (f64, f64) {
        match self {
            BinaryOp::Add => (1.0, 1.0),
            BinaryOp::Sub => (1.0, -1.0),
            BinaryOp::Mul => (b, a),
            BinaryOp::DivEps => {
                let bc = clamp_sign(b);
                let db = if b.abs() >= EPS { -a / (bc * bc) } else { 0.0 };
                (1.0 / bc, db)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input (parameter or constant).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    pub fn unary(&mut self, kind: UnaryOp, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if kind == UnaryOp::Sqrt && xv.data().iter().any(|&v| v < 0.0) {
            return Err(Error::Domain("sqrt of a negative entry".into()));
        }
        let value = xv.map(|v| kind.apply(v));
        Ok(self.push(value, Op::Unary(kind, x)))
    }

    pub fn binary(&mut self, kind: BinaryOp, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let (ra, ca) = av.shape();
        let bc = match bv.shape() {
            s if s == (ra, ca) => Broadcast::Same,
            (1, 1) => Broadcast::Scalar,
            (1, c) if c == ca => Broadcast::Row,
            (r, 1) if r == ra => Broadcast::Col,
            s => {
                return Err(Error::Shape {
                    op: "elementwise",
                    left: (ra, ca),
                    right: s,
                })
            }
        };
        let value = Tensor::from_fn(ra, ca, |i, j| {
            kind.apply(av.get(i, j), broadcast_get(bv, bc, i, j))
        });
        Ok(self.push(value, Op::Binary(kind, bc, a, b)))
    }

    pub fn reduce(&mut self, kind: ReduceOp, x: Var) -> Var {
        let xv = self.value(x);
        let (r, c) = xv.shape();
        let value = match kind {
            ReduceOp::SumAll => Tensor::scalar(xv.sum()),
            ReduceOp::RowSum => Tensor::from_fn(r, 1, |i, _| xv.row(i).iter().sum()),
            ReduceOp::ColSum => Tensor::from_fn(1, c, |_, j| (0..r).map(|i| xv.get(i, j)).sum()),
        };
        self.push(value, Op::Reduce(kind, x))
    }

    /// Softmax over each row, stabilized by subtracting the row maximum.
    pub fn row_softmax(&mut self, x: Var) -> Var {
        let value = row_softmax_values(self.value(x));
        self.push(value, Op::RowSoftmax(x))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let value = self.value(x).transpose();
        self.push(value, Op::Transpose(x))
    }

    /// Row `i` of `x` as a 1 x cols tensor.
    pub fn row(&mut self, x: Var, i: usize) -> Result<Var> {
        let xv = self.value(x);
        if i >= xv.rows() {
            return Err(Error::Contract(format!(
                "row {i} out of range for {:?}",
                xv.shape()
            )));
        }
        let value = Tensor::new(1, xv.cols(), xv.row(i).to_vec())?;
        Ok(self.push(value, Op::Row(x, i)))
    }

    /// Column `j` of `x` as a rows x 1 tensor.
    pub fn column(&mut self, x: Var, j: usize) -> Result<Var> {
        let xv = self.value(x);
        if j >= xv.cols() {
            return Err(Error::Contract(format!(
                "column {j} out of range for {:?}",
                xv.shape()
            )));
        }
        let value = Tensor::from_fn(xv.rows(), 1, |i, _| xv.get(i, j));
        Ok(self.push(value, Op::Column(x, j)))
    }

    // Shorthands used by the loss code.

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Mul, a, b)
    }

    pub fn div_eps(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::DivEps, a, b)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Relu, x).expect("relu is total")
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Sigmoid, x).expect("sigmoid is total")
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Square, x).expect("square is total")
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        self.unary(UnaryOp::Scale(c), x).expect("scale is total")
    }

    pub fn sqrt(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryOp::Sqrt, x)
    }

    pub fn log2eps(&mut self, x: Var) -> Var {
        self.unary(UnaryOp::Log2Eps, x).expect("log2eps is total")
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        self.reduce(ReduceOp::SumAll, x)
    }

    pub fn row_sum(&mut self, x: Var) -> Var {
        self.reduce(ReduceOp::RowSum, x)
    }

    pub fn col_sum(&mut self, x: Var) -> Var {
        self.reduce(ReduceOp::ColSum, x)
    }

    /// Reverse pass from a 1x1 output. Does not mutate the tape, so calling it
    /// twice yields identical gradients.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        let out_shape = self.shape(output);
        if out_shape != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a 1x1 output, got {}x{}",
                out_shape.0, out_shape.1
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; output.0 + 1];
        grads[output.0] = Some(Tensor::scalar(1.0));

        for id in (0..=output.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            match node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let ga = g.matmul(&self.value(b).transpose())?;
                    let gb = self.value(a).transpose().matmul(&g)?;
                    accumulate(&mut grads, a, ga);
                    accumulate(&mut grads, b, gb);
                }
                Op::Unary(kind, x) => {
                    let xv = self.value(x);
                    let local = xv.zip_map(&node.value, |xi, yi| kind.derivative(xi, yi));
                    accumulate(&mut grads, x, g.zip_map(&local, |gi, li| gi * li));
                }
                Op::Binary(kind, bc, a, b) => {
                    let (av, bv) = (self.value(a), self.value(b));
                    let (r, c) = av.shape();
                    let mut ga = Tensor::zeros(r, c);
                    let mut gb = Tensor::zeros(bv.rows(), bv.cols());
                    for i in 0..r {
                        for j in 0..c {
                            let (bi, bj) = broadcast_index(bc, i, j);
                            let (da, db) = kind.partials(av.get(i, j), bv.get(bi, bj));
                            let gij = g.get(i, j);
                            ga.set(i, j, gij * da);
                            gb.set(bi, bj, gb.get(bi, bj) + gij * db);
                        }
                    }
                    accumulate(&mut grads, a, ga);
                    accumulate(&mut grads, b, gb);
                }
                Op::Reduce(kind, x) => {
                    let (r, c) = self.shape(x);
                    let gx = match kind {
                        ReduceOp::SumAll => Tensor::filled(r, c, g.get(0, 0)),
                        ReduceOp::RowSum => Tensor::from_fn(r, c, |i, _| g.get(i, 0)),
                        ReduceOp::ColSum => Tensor::from_fn(r, c, |_, j| g.get(0, j)),
                    };
                    accumulate(&mut grads, x, gx);
                }
                Op::RowSoftmax(x) => {
                    // dx_ij = y_ij * (g_ij - sum_k g_ik y_ik)
                    let y = &node.value;
                    let (r, c) = y.shape();
                    let mut gx = Tensor::zeros(r, c);
                    for i in 0..r {
                        let dot: f64 = g.row(i).iter().zip(y.row(i)).map(|(a, b)| a * b).sum();
                        for j in 0..c {
                            gx.set(i, j, y.get(i, j) * (g.get(i, j) - dot));
                        }
                    }
                    accumulate(&mut grads, x, gx);
                }
                Op::Transpose(x) => accumulate(&mut grads, x, g.transpose()),
                Op::Row(x, i) => {
                    let (r, c) = self.shape(x);
                    let gx = Tensor::from_fn(r, c, |k, j| if k == i { g.get(0, j) } else { 0.0 });
                    accumulate(&mut grads, x, gx);
                }
                Op::Column(x, j) => {
                    let (r, c) = self.shape(x);
                    let gx = Tensor::from_fn(r, c, |i, k| if k == j { g.get(i, 0) } else { 0.0 });
                    accumulate(&mut grads, x, gx);
                }
            }
            grads[id] = Some(g);
        }
        grads.resize(self.nodes.len(), None);
        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

#[inline]
fn broadcast_index(bc: Broadcast, i: usize, j: usize) -> (usize, usize) {
    match bc {
        Broadcast::Same => (i, j),
        Broadcast::Row => (0, j),
        Broadcast::Col => (i, 0),
        Broadcast::Scalar => (0, 0),
    }
}

#[inline]
fn broadcast_get(b: &Tensor, bc: Broadcast, i: usize, j: usize) -> f64 {
    let (bi, bj) = broadcast_index(bc, i, j);
    b.get(bi, bj)
}

fn row_softmax_values(x: &Tensor) -> Tensor {
    let (r, c) = x.shape();
    let mut out = Tensor::zeros(r, c);
    for i in 0..r {
        let row = x.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (j, &v) in row.iter().enumerate() {
            let e = (v - max).exp();
            out.set(i, j, e);
            total += e;
        }
        for j in 0..c {
            out.set(i, j, out.get(i, j) / total);
        }
    }
    out
}
