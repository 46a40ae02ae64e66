use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::tensor::Tensor;

/// Handle to a node of a [`Graph`]. Only meaningful for the graph that issued it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Variance floor used by batch normalization in both modes.
pub const BN_VAR_FLOOR: f64 = 1e-5;

#[derive(Clone, Debug)]
enum Op<T> {
    Leaf,
    MatMul,
    AddRow,
    MulRow,
    Add,
    Sub,
    Mul,
    Relu,
    Sigmoid,
    LogSigmoid,
    Tanh,
    Log,
    Square,
    Mean,
    Sum,
    ConcatRows,
    Scale(T),
    BatchNorm {
        xhat: Tensor<T>,
        inv_std: Vec<T>,
        floored: Vec<bool>,
    },
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul => "matmul",
            Op::AddRow => "add_row",
            Op::MulRow => "mul_row",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Relu => "relu",
            Op::Sigmoid => "sigmoid",
            Op::LogSigmoid => "log_sigmoid",
            Op::Tanh => "tanh",
            Op::Log => "log",
            Op::Square => "square",
            Op::Mean => "mean",
            Op::Sum => "sum",
            Op::ConcatRows => "concat_rows",
            Op::Scale(_) => "scale",
            Op::BatchNorm { .. } => "batch_norm",
        }
    }
}

#[derive(Clone, Debug)]
struct Node<T> {
    op: Op<T>,
    inputs: Vec<NodeId>,
    value: Tensor<T>,
    requires_grad: bool,
}

/// Define-by-run computation graph.
///
/// Nodes are appended in evaluation order, so every input id is smaller than the id of
/// the node consuming it and the reverse sweep in [`Graph::backward`] is a plain
/// descending loop. Forward values are computed eagerly.
#[derive(Clone, Debug, Default)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
}

/// Result of [`Graph::backward`]: one optional gradient per node.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of the root with respect to `id`, if `id` depends on a parameter and
    /// is reachable from the root.
    pub fn get(&self, id: NodeId) -> Option<&Tensor<T>> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    /// Like [`Gradients::get`] but yields zeros of the right shape for unreachable nodes.
    pub fn get_or_zeros(&self, graph: &Graph<T>, id: NodeId) -> Tensor<T> {
        self.get(id).cloned().unwrap_or_else(|| {
            let (r, c) = graph.value(id).shape();
            Tensor::zeros(r, c)
        })
    }
}

/// `log(sigmoid(x))` without overflow: `-(max(-x, 0) + ln(1 + e^{-|x|}))`.
pub fn log_sigmoid<T: Scalar>(x: T) -> T {
    -((-x).max(T::zero()) + (-x.abs()).exp().ln_1p())
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        self.nodes[id.0].value.shape()
    }

    /// Input node ids of `id`, in operand order.
    pub fn inputs(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].inputs
    }

    pub fn op_name(&self, id: NodeId) -> &'static str {
        self.nodes[id.0].op.name()
    }

    fn push(&mut self, op: Op<T>, inputs: Vec<NodeId>, value: Tensor<T>) -> NodeId {
        let requires_grad = inputs.iter().any(|i| self.nodes[i.0].requires_grad);
        self.nodes.push(Node {
            op,
            inputs,
            value,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Trainable leaf: gradients flow to it.
    pub fn param(&mut self, value: Tensor<T>) -> NodeId {
        self.nodes.push(Node {
            op: Op::Leaf,
            inputs: Vec::new(),
            value,
            requires_grad: true,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Constant leaf: no gradient is ever computed for it.
    pub fn constant(&mut self, value: Tensor<T>) -> NodeId {
        self.nodes.push(Node {
            op: Op::Leaf,
            inputs: Vec::new(),
            value,
            requires_grad: false,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::Shape { op, lhs: sa, rhs: sb });
        }
        Ok(())
    }

    fn row_broadcast(&self, op: &'static str, x: NodeId, row: NodeId) -> Result<()> {
        let (sx, sr) = (self.shape(x), self.shape(row));
        if sr != (1, sx.1) {
            return Err(Error::Shape { op, lhs: sx, rhs: sr });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::MatMul, vec![a, b], value))
    }

    /// `x + row`, with the `1 x n` row broadcast over every row of `x`.
    pub fn add_row(&mut self, x: NodeId, row: NodeId) -> Result<NodeId> {
        self.row_broadcast("add_row", x, row)?;
        let (xv, rv) = (self.value(x), self.value(row));
        let cols = xv.cols();
        let data = xv
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| v + rv.data()[i % cols])
            .collect();
        let value = Tensor::from_raw(xv.rows(), cols, data);
        Ok(self.push(Op::AddRow, vec![x, row], value))
    }

    /// `x * row` elementwise, with the `1 x n` row broadcast over every row of `x`.
    pub fn mul_row(&mut self, x: NodeId, row: NodeId) -> Result<NodeId> {
        self.row_broadcast("mul_row", x, row)?;
        let (xv, rv) = (self.value(x), self.value(row));
        let cols = xv.cols();
        let data = xv
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| v * rv.data()[i % cols])
            .collect();
        let value = Tensor::from_raw(xv.rows(), cols, data);
        Ok(self.push(Op::MulRow, vec![x, row], value))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("add", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(Op::Add, vec![a, b], value))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y);
        Ok(self.push(Op::Sub, vec![a, b], value))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("mul", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(Op::Mul, vec![a, b], value))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(|v| v.max(T::zero()));
        self.push(Op::Relu, vec![x], value)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(sigmoid);
        self.push(Op::Sigmoid, vec![x], value)
    }

    /// `log(sigmoid(x))` evaluated through the softplus identity.
    pub fn log_sigmoid(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(log_sigmoid);
        self.push(Op::LogSigmoid, vec![x], value)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(|v| v.tanh());
        self.push(Op::Tanh, vec![x], value)
    }

    pub fn log(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(|v| v.ln());
        self.push(Op::Log, vec![x], value)
    }

    pub fn square(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(|v| v * v);
        self.push(Op::Square, vec![x], value)
    }

    /// Mean of all entries, as a `1 x 1` node. The mean of an empty tensor is 0.
    pub fn mean(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let n = v.len().max(1);
        let value = Tensor::scalar(v.sum() / T::from_usize(n).unwrap());
        self.push(Op::Mean, vec![x], value)
    }

    /// Sum of all entries, as a `1 x 1` node.
    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let value = Tensor::scalar(self.value(x).sum());
        self.push(Op::Sum, vec![x], value)
    }

    pub fn scale(&mut self, x: NodeId, factor: T) -> NodeId {
        let value = self.value(x).map(|v| v * factor);
        self.push(Op::Scale(factor), vec![x], value)
    }

    pub fn neg(&mut self, x: NodeId) -> NodeId {
        self.scale(x, -T::one())
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let values: Vec<&Tensor<T>> = parts.iter().map(|&p| self.value(p)).collect();
        let value = Tensor::concat_rows(&values)?;
        Ok(self.push(Op::ConcatRows, parts.to_vec(), value))
    }

    /// Training-mode batch normalization over rows: `gamma * (x - mean) / std + beta`.
    ///
    /// Per-feature variance is the biased batch variance floored at [`BN_VAR_FLOOR`]; no
    /// epsilon is added above the floor. Returns the node and the batch mean/variance so
    /// the caller can update running statistics.
    pub fn batch_norm(
        &mut self,
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
    ) -> Result<(NodeId, Vec<T>, Vec<T>)> {
        self.row_broadcast("batch_norm", x, gamma)?;
        self.row_broadcast("batch_norm", x, beta)?;
        let xv = self.value(x);
        let (n, cols) = xv.shape();
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        let nf = T::from_usize(n).unwrap();
        let mut mean = vec![T::zero(); cols];
        for r in 0..n {
            for (m, &v) in mean.iter_mut().zip(xv.row_slice(r)) {
                *m = *m + v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / nf);
        let mut var = vec![T::zero(); cols];
        for r in 0..n {
            for ((s, &v), &m) in var.iter_mut().zip(xv.row_slice(r)).zip(&mean) {
                *s = *s + (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s = *s / nf);
        let floor = T::lit(BN_VAR_FLOOR);
        let floored: Vec<bool> = var.iter().map(|&v| v < floor).collect();
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / v.max(floor).sqrt()).collect();
        let mut xhat = Tensor::zeros(n, cols);
        for (i, (o, &v)) in xhat.data_mut().iter_mut().zip(xv.data()).enumerate() {
            let c = i % cols;
            *o = (v - mean[c]) * inv_std[c];
        }
        let (g, b) = (self.value(gamma), self.value(beta));
        let data = xhat
            .data()
            .iter()
            .enumerate()
            .map(|(i, &h)| g.data()[i % cols] * h + b.data()[i % cols])
            .collect();
        let value = Tensor::from_raw(n, cols, data);
        let id = self.push(
            Op::BatchNorm {
                xhat,
                inv_std,
                floored,
            },
            vec![x, gamma, beta],
            value,
        );
        Ok((id, mean, var))
    }

    /// Reverse sweep from a `1 x 1` root.
    pub fn backward(&self, root: NodeId) -> Result<Gradients<T>> {
        let (rows, cols) = self.shape(root);
        if (rows, cols) != (1, 1) {
            return Err(Error::NonScalarRoot { rows, cols });
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::scalar(T::one()));
        for i in (0..=root.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn wants(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn propagate(&self, node: &Node<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let ins = &node.inputs;
        let val = |id: NodeId| &self.nodes[id.0].value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul => {
                let (a, b) = (val(ins[0]), val(ins[1]));
                let (m, k, n) = (a.rows(), a.cols(), b.cols());
                if self.wants(ins[0]) {
                    let slot = slot(grads, ins[0], m, k);
                    // dA += dC @ B^T
                    T::gemm(
                        m,
                        n,
                        k,
                        T::one(),
                        g.data(),
                        (n as isize, 1),
                        b.data(),
                        (1, n as isize),
                        T::one(),
                        slot.data_mut(),
                    );
                }
                if self.wants(ins[1]) {
                    let slot = slot(grads, ins[1], k, n);
                    // dB += A^T @ dC
                    T::gemm(
                        k,
                        m,
                        n,
                        T::one(),
                        a.data(),
                        (1, k as isize),
                        g.data(),
                        (n as isize, 1),
                        T::one(),
                        slot.data_mut(),
                    );
                }
            }
            Op::AddRow => {
                if self.wants(ins[0]) {
                    accumulate(grads, ins[0], g);
                }
                if self.wants(ins[1]) {
                    let r = column_sums(g);
                    accumulate(grads, ins[1], &r);
                }
            }
            Op::MulRow => {
                let (x, r) = (val(ins[0]), val(ins[1]));
                let cols = x.cols();
                if self.wants(ins[0]) {
                    let d = Tensor::from_raw(
                        g.rows(),
                        cols,
                        g.data()
                            .iter()
                            .enumerate()
                            .map(|(i, &gv)| gv * r.data()[i % cols])
                            .collect(),
                    );
                    accumulate(grads, ins[0], &d);
                }
                if self.wants(ins[1]) {
                    let d = column_sums(&g.zip_map(x, |a, b| a * b));
                    accumulate(grads, ins[1], &d);
                }
            }
            Op::Add => {
                for &id in ins {
                    if self.wants(id) {
                        accumulate(grads, id, g);
                    }
                }
            }
            Op::Sub => {
                if self.wants(ins[0]) {
                    accumulate(grads, ins[0], g);
                }
                if self.wants(ins[1]) {
                    accumulate(grads, ins[1], &g.map(|v| -v));
                }
            }
            Op::Mul => {
                let (a, b) = (val(ins[0]), val(ins[1]));
                if self.wants(ins[0]) {
                    accumulate(grads, ins[0], &g.zip_map(b, |x, y| x * y));
                }
                if self.wants(ins[1]) {
                    accumulate(grads, ins[1], &g.zip_map(a, |x, y| x * y));
                }
            }
            Op::Relu => {
                // subgradient 0 at exactly 0
                let x = val(ins[0]);
                let d = g.zip_map(x, |gv, xv| if xv > T::zero() { gv } else { T::zero() });
                accumulate(grads, ins[0], &d);
            }
            Op::Sigmoid => {
                let y = &node.value;
                let d = g.zip_map(y, |gv, s| gv * s * (T::one() - s));
                accumulate(grads, ins[0], &d);
            }
            Op::LogSigmoid => {
                // d/dx log sigmoid(x) = sigmoid(-x)
                let x = val(ins[0]);
                let d = g.zip_map(x, |gv, xv| gv * sigmoid(-xv));
                accumulate(grads, ins[0], &d);
            }
            Op::Tanh => {
                let y = &node.value;
                let d = g.zip_map(y, |gv, t| gv * (T::one() - t * t));
                accumulate(grads, ins[0], &d);
            }
            Op::Log => {
                let x = val(ins[0]);
                let d = g.zip_map(x, |gv, xv| gv / xv);
                accumulate(grads, ins[0], &d);
            }
            Op::Square => {
                let x = val(ins[0]);
                let two = T::lit(2.0);
                let d = g.zip_map(x, |gv, xv| two * gv * xv);
                accumulate(grads, ins[0], &d);
            }
            Op::Mean => {
                let x = val(ins[0]);
                let n = T::from_usize(x.len().max(1)).unwrap();
                let d = Tensor::filled(x.rows(), x.cols(), g.item() / n);
                accumulate(grads, ins[0], &d);
            }
            Op::Sum => {
                let x = val(ins[0]);
                let d = Tensor::filled(x.rows(), x.cols(), g.item());
                accumulate(grads, ins[0], &d);
            }
            Op::Scale(f) => {
                let f = *f;
                accumulate(grads, ins[0], &g.map(|v| v * f));
            }
            Op::ConcatRows => {
                let mut start = 0;
                for &id in ins {
                    let rows = val(id).rows();
                    if self.wants(id) {
                        accumulate(grads, id, &g.slice_rows(start, start + rows));
                    }
                    start += rows;
                }
            }
            Op::BatchNorm {
                xhat,
                inv_std,
                floored,
            } => {
                let gamma = val(ins[1]);
                let (n, cols) = xhat.shape();
                let nf = T::from_usize(n).unwrap();
                if self.wants(ins[1]) {
                    let d = column_sums(&g.zip_map(xhat, |a, b| a * b));
                    accumulate(grads, ins[1], &d);
                }
                if self.wants(ins[2]) {
                    accumulate(grads, ins[2], &column_sums(g));
                }
                if self.wants(ins[0]) {
                    // dxhat = g * gamma
                    let dxhat = Tensor::from_raw(
                        n,
                        cols,
                        g.data()
                            .iter()
                            .enumerate()
                            .map(|(i, &gv)| gv * gamma.data()[i % cols])
                            .collect(),
                    );
                    let sum_d = column_sums(&dxhat);
                    let sum_dx = column_sums(&dxhat.zip_map(xhat, |a, b| a * b));
                    let mut d = Tensor::zeros(n, cols);
                    for (i, o) in d.data_mut().iter_mut().enumerate() {
                        let c = i % cols;
                        let mean_d = sum_d.data()[c] / nf;
                        *o = if floored[c] {
                            inv_std[c] * (dxhat.data()[i] - mean_d)
                        } else {
                            inv_std[c]
                                * (dxhat.data()[i]
                                    - mean_d
                                    - xhat.data()[i] * sum_dx.data()[c] / nf)
                        };
                    }
                    accumulate(grads, ins[0], &d);
                }
            }
        }
    }
}

fn column_sums<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    let cols = t.cols();
    let mut out = vec![T::zero(); cols];
    for (i, &v) in t.data().iter().enumerate() {
        out[i % cols] = out[i % cols] + v;
    }
    Tensor::from_raw(1, cols, out)
}

fn slot<T: Scalar>(
    grads: &mut [Option<Tensor<T>>],
    id: NodeId,
    rows: usize,
    cols: usize,
) -> &mut Tensor<T> {
    grads[id.0].get_or_insert_with(|| Tensor::zeros(rows, cols))
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], id: NodeId, g: &Tensor<T>) {
    match &mut grads[id.0] {
        Some(acc) => acc.add_assign(g),
        none => *none = Some(g.clone()),
    }
}
