//! Reverse-mode tape.
//!
//! Ops evaluate eagerly and record just enough to run backward. Nodes are
//! appended in construction order, so reverse index order is a valid
//! reverse-topological traversal and every node is visited once.

use crate::tensor::{
    gelu, gelu_derivative, last_axis_view, layer_norm_last_axis, matmul, matmul_nt, matmul_tn,
    softmax_last_axis, zip,
};
use crate::{Result, Scalar, Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

/// Axis selector for 2D concat/slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

enum Op<T: Scalar> {
    Leaf,
    Param,
    Matmul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    AddScalar(NodeId),
    MulScalar(NodeId, T),
    AddRow(NodeId, NodeId),
    MulRow(NodeId, NodeId),
    Reshape(NodeId),
    Transpose(NodeId),
    Concat(Vec<NodeId>, Axis),
    Slice(NodeId, Axis, usize),
    Softmax(NodeId),
    LayerNorm(NodeId, Vec<T>),
    Gelu(NodeId),
    Mse(NodeId, NodeId),
}

impl<T: Scalar> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Param => "param",
            Op::Matmul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::AddScalar(..) => "add_scalar",
            Op::MulScalar(..) => "mul_scalar",
            Op::AddRow(..) => "add_row",
            Op::MulRow(..) => "mul_row",
            Op::Reshape(..) => "reshape",
            Op::Transpose(..) => "transpose",
            Op::Concat(..) => "concat",
            Op::Slice(..) => "slice",
            Op::Softmax(..) => "softmax",
            Op::LayerNorm(..) => "layer_norm",
            Op::Gelu(..) => "gelu",
            Op::Mse(..) => "mse",
        }
    }
}

struct Node<T: Scalar> {
    value: Tensor<T>,
    op: Op<T>,
}

/// Per-parameter gradients in registration order.
#[derive(Debug, Clone)]
pub struct GradMap<T: Scalar> {
    entries: Vec<(String, Tensor<T>)>,
}

impl<T: Scalar> GradMap<T> {
    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, g)| g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.entries.iter().map(|(n, g)| (n.as_str(), g))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries_mut(&mut self) -> &mut Vec<(String, Tensor<T>)> {
        &mut self.entries
    }
}

pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
    params: Vec<(String, NodeId)>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            params: Vec::new(),
        }
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Constant input: participates in forward, receives no gradient.
    pub fn leaf(&mut self, value: Tensor<T>) -> NodeId {
        self.push(value, Op::Leaf)
    }

    /// Registered trainable input.
    pub fn param(&mut self, name: impl Into<String>, value: Tensor<T>) -> NodeId {
        let id = self.push(value, Op::Param);
        self.params.push((name.into(), id));
        id
    }

    pub fn param_ids(&self) -> impl Iterator<Item = (&str, NodeId)> {
        self.params.iter().map(|(n, id)| (n.as_str(), *id))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (m, ka) = self.value(a).dims2();
        let (kb, n) = self.value(b).dims2();
        assert_eq!(ka, kb, "matmul inner dims {ka} vs {kb}");
        let _ = (m, n);
        let v = matmul(self.value(a), self.value(b));
        self.push(v, Op::Matmul(a, b))
    }

    fn binary(&mut self, a: NodeId, b: NodeId, op: fn(NodeId, NodeId) -> Op<T>, f: fn(T, T) -> T) -> NodeId {
        assert_eq!(
            self.value(a).shape(),
            self.value(b).shape(),
            "elementwise op shape mismatch"
        );
        let v = zip(self.value(a), self.value(b), f);
        self.push(v, op(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(a, b, Op::Add, |x, y| x + y)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(a, b, Op::Sub, |x, y| x - y)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(a, b, Op::Mul, |x, y| x * y)
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> NodeId {
        let c = T::from_f64(c);
        let v = self.value(a).map(|x| x + c);
        self.push(v, Op::AddScalar(a))
    }

    pub fn mul_scalar(&mut self, a: NodeId, c: f64) -> NodeId {
        let c = T::from_f64(c);
        let v = self.value(a).map(|x| x * c);
        self.push(v, Op::MulScalar(a, c))
    }

    /// Broadcast-add a [1,n] row into every row of a [m,n] matrix.
    pub fn add_row(&mut self, x: NodeId, row: NodeId) -> NodeId {
        let (_, n) = self.value(x).dims2();
        let (r1, rn) = self.value(row).dims2();
        assert!(r1 == 1 && rn == n, "add_row expects [1,{n}] row, got [{r1},{rn}]");
        let rowv = self.value(row).data().to_vec();
        let v = {
            let x = self.value(x);
            let mut out = x.data().to_vec();
            for chunk in out.chunks_exact_mut(n) {
                for (o, &r) in chunk.iter_mut().zip(&rowv) {
                    *o = *o + r;
                }
            }
            Tensor::new(x.shape().to_vec(), out)
        };
        self.push(v, Op::AddRow(x, row))
    }

    /// Broadcast-multiply a [1,n] row into every row of a [m,n] matrix.
    pub fn mul_row(&mut self, x: NodeId, row: NodeId) -> NodeId {
        let (_, n) = self.value(x).dims2();
        let (r1, rn) = self.value(row).dims2();
        assert!(r1 == 1 && rn == n, "mul_row expects [1,{n}] row, got [{r1},{rn}]");
        let rowv = self.value(row).data().to_vec();
        let v = {
            let x = self.value(x);
            let mut out = x.data().to_vec();
            for chunk in out.chunks_exact_mut(n) {
                for (o, &r) in chunk.iter_mut().zip(&rowv) {
                    *o = *o * r;
                }
            }
            Tensor::new(x.shape().to_vec(), out)
        };
        self.push(v, Op::MulRow(x, row))
    }

    pub fn reshape(&mut self, a: NodeId, shape: Vec<usize>) -> NodeId {
        let v = self.value(a);
        assert_eq!(v.numel(), shape.iter().product::<usize>(), "reshape numel mismatch");
        let v = Tensor::new(shape, v.data().to_vec());
        self.push(v, Op::Reshape(a))
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let (m, n) = self.value(a).dims2();
        let src = self.value(a).data();
        let mut out = vec![T::ZERO; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = src[i * n + j];
            }
        }
        let v = Tensor::new(vec![n, m], out);
        self.push(v, Op::Transpose(a))
    }

    pub fn concat(&mut self, parts: &[NodeId], axis: Axis) -> NodeId {
        assert!(!parts.is_empty(), "concat of zero tensors");
        let dims: Vec<(usize, usize)> = parts.iter().map(|&p| self.value(p).dims2()).collect();
        let v = match axis {
            Axis::Rows => {
                let n = dims[0].1;
                assert!(dims.iter().all(|&(_, c)| c == n), "concat rows: column mismatch");
                let rows: usize = dims.iter().map(|&(r, _)| r).sum();
                let mut out = Vec::with_capacity(rows * n);
                for &p in parts {
                    out.extend_from_slice(self.value(p).data());
                }
                Tensor::new(vec![rows, n], out)
            }
            Axis::Cols => {
                let m = dims[0].0;
                assert!(dims.iter().all(|&(r, _)| r == m), "concat cols: row mismatch");
                let cols: usize = dims.iter().map(|&(_, c)| c).sum();
                let mut out = Vec::with_capacity(m * cols);
                for i in 0..m {
                    for (&p, &(_, c)) in parts.iter().zip(&dims) {
                        out.extend_from_slice(&self.value(p).data()[i * c..(i + 1) * c]);
                    }
                }
                Tensor::new(vec![m, cols], out)
            }
        };
        self.push(v, Op::Concat(parts.to_vec(), axis))
    }

    pub fn slice(&mut self, a: NodeId, axis: Axis, start: usize, len: usize) -> NodeId {
        let (m, n) = self.value(a).dims2();
        let v = match axis {
            Axis::Rows => {
                assert!(start + len <= m, "slice rows out of range");
                let data = self.value(a).data()[start * n..(start + len) * n].to_vec();
                Tensor::new(vec![len, n], data)
            }
            Axis::Cols => {
                assert!(start + len <= n, "slice cols out of range");
                let src = self.value(a).data();
                let mut out = Vec::with_capacity(m * len);
                for i in 0..m {
                    out.extend_from_slice(&src[i * n + start..i * n + start + len]);
                }
                Tensor::new(vec![m, len], out)
            }
        };
        self.push(v, Op::Slice(a, axis, start))
    }

    pub fn softmax(&mut self, a: NodeId) -> NodeId {
        let v = softmax_last_axis(self.value(a));
        self.push(v, Op::Softmax(a))
    }

    pub fn layer_norm(&mut self, a: NodeId, eps: f64) -> NodeId {
        let (v, inv_std) = layer_norm_last_axis(self.value(a), eps);
        self.push(v, Op::LayerNorm(a, inv_std))
    }

    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(gelu);
        self.push(v, Op::Gelu(a))
    }

    /// Mean squared error over all elements; returns a scalar node.
    pub fn mse(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.value(a).shape(), self.value(b).shape(), "mse shape mismatch");
        let inv_n = T::from_f64(1.0 / self.value(a).numel() as f64);
        let mut acc = T::ZERO;
        for (&x, &y) in self.value(a).data().iter().zip(self.value(b).data()) {
            let d = x - y;
            acc = acc + d * d;
        }
        let v = Tensor::scalar(acc * inv_n);
        self.push(v, Op::Mse(a, b))
    }

    /// Reverse pass from a scalar loss. Gradients are returned for every
    /// registered parameter; parameters off the loss path get zeros.
    pub fn backward(&self, loss: NodeId) -> Result<GradMap<T>> {
        let loss_value = self.value(loss);
        if !loss_value.is_scalar() {
            return Err(TensorError::NonScalarLoss(loss_value.shape().to_vec()));
        }

        let mut grads: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(T::ONE));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !matches!(node.op, Op::Leaf | Op::Param) && g.has_nan() {
                return Err(TensorError::NanInBackward { op: node.op.name() });
            }
            match &node.op {
                Op::Leaf => {}
                Op::Param => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::Matmul(a, b) => {
                    let da = matmul_nt(&g, self.value(*b));
                    let db = matmul_tn(self.value(*a), &g);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *b, g.map(|x| -x));
                    accumulate(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let da = zip(&g, self.value(*b), |x, y| x * y);
                    let db = zip(&g, self.value(*a), |x, y| x * y);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::AddScalar(a) => accumulate(&mut grads, *a, g),
                Op::MulScalar(a, c) => {
                    let c = *c;
                    accumulate(&mut grads, *a, g.map(|x| x * c));
                }
                Op::AddRow(x, row) => {
                    let (_, n) = self.value(*x).dims2();
                    let mut row_grad = vec![T::ZERO; n];
                    for chunk in g.data().chunks_exact(n) {
                        for (acc, &v) in row_grad.iter_mut().zip(chunk) {
                            *acc = *acc + v;
                        }
                    }
                    accumulate(&mut grads, *row, Tensor::new(vec![1, n], row_grad));
                    accumulate(&mut grads, *x, g);
                }
                Op::MulRow(x, row) => {
                    let (_, n) = self.value(*x).dims2();
                    let rowv = self.value(*row).data();
                    let xv = self.value(*x).data();
                    let mut row_grad = vec![T::ZERO; n];
                    for (chunk, xchunk) in g.data().chunks_exact(n).zip(xv.chunks_exact(n)) {
                        for ((acc, &gv), &xval) in row_grad.iter_mut().zip(chunk).zip(xchunk) {
                            *acc = *acc + gv * xval;
                        }
                    }
                    let mut dx = g.data().to_vec();
                    for chunk in dx.chunks_exact_mut(n) {
                        for (o, &r) in chunk.iter_mut().zip(rowv) {
                            *o = *o * r;
                        }
                    }
                    accumulate(&mut grads, *row, Tensor::new(vec![1, n], row_grad));
                    accumulate(&mut grads, *x, Tensor::new(self.value(*x).shape().to_vec(), dx));
                }
                Op::Reshape(a) => {
                    let shape = self.value(*a).shape().to_vec();
                    accumulate(&mut grads, *a, Tensor::new(shape, g.into_data()));
                }
                Op::Transpose(a) => {
                    let (n, m) = g.dims2();
                    let src = g.data();
                    let mut out = vec![T::ZERO; m * n];
                    for i in 0..n {
                        for j in 0..m {
                            out[j * n + i] = src[i * m + j];
                        }
                    }
                    accumulate(&mut grads, *a, Tensor::new(vec![m, n], out));
                }
                Op::Concat(parts, axis) => match axis {
                    Axis::Rows => {
                        let mut row0 = 0;
                        for &p in parts {
                            let (r, c) = self.value(p).dims2();
                            let data = g.data()[row0 * c..(row0 + r) * c].to_vec();
                            accumulate(&mut grads, p, Tensor::new(vec![r, c], data));
                            row0 += r;
                        }
                    }
                    Axis::Cols => {
                        let (m, total) = g.dims2();
                        let mut col0 = 0;
                        for &p in parts {
                            let (_, c) = self.value(p).dims2();
                            let mut data = Vec::with_capacity(m * c);
                            for i in 0..m {
                                data.extend_from_slice(&g.data()[i * total + col0..i * total + col0 + c]);
                            }
                            accumulate(&mut grads, p, Tensor::new(vec![m, c], data));
                            col0 += c;
                        }
                    }
                },
                Op::Slice(a, axis, start) => {
                    let (pm, pn) = self.value(*a).dims2();
                    let mut out = vec![T::ZERO; pm * pn];
                    match axis {
                        Axis::Rows => {
                            let (len, _) = g.dims2();
                            out[start * pn..(start + len) * pn].copy_from_slice(g.data());
                        }
                        Axis::Cols => {
                            let (m, len) = g.dims2();
                            for i in 0..m {
                                out[i * pn + start..i * pn + start + len]
                                    .copy_from_slice(&g.data()[i * len..(i + 1) * len]);
                            }
                        }
                    }
                    accumulate(&mut grads, *a, Tensor::new(vec![pm, pn], out));
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let (rows, width) = last_axis_view(y);
                    let mut dx = vec![T::ZERO; y.numel()];
                    for r in 0..rows {
                        let yr = &y.data()[r * width..(r + 1) * width];
                        let gr = &g.data()[r * width..(r + 1) * width];
                        let mut dot = T::ZERO;
                        for (&yv, &gv) in yr.iter().zip(gr) {
                            dot = dot + yv * gv;
                        }
                        for ((o, &yv), &gv) in dx[r * width..(r + 1) * width]
                            .iter_mut()
                            .zip(yr)
                            .zip(gr)
                        {
                            *o = yv * (gv - dot);
                        }
                    }
                    accumulate(&mut grads, *a, Tensor::new(y.shape().to_vec(), dx));
                }
                Op::LayerNorm(a, inv_std) => {
                    let y = &node.value;
                    let (rows, width) = last_axis_view(y);
                    let inv_n = T::from_f64(1.0 / width as f64);
                    let mut dx = vec![T::ZERO; y.numel()];
                    for r in 0..rows {
                        let yr = &y.data()[r * width..(r + 1) * width];
                        let gr = &g.data()[r * width..(r + 1) * width];
                        let mut gsum = T::ZERO;
                        let mut gydot = T::ZERO;
                        for (&yv, &gv) in yr.iter().zip(gr) {
                            gsum = gsum + gv;
                            gydot = gydot + gv * yv;
                        }
                        let gmean = gsum * inv_n;
                        let gymean = gydot * inv_n;
                        let s = inv_std[r];
                        for ((o, &yv), &gv) in dx[r * width..(r + 1) * width]
                            .iter_mut()
                            .zip(yr)
                            .zip(gr)
                        {
                            *o = s * (gv - gmean - yv * gymean);
                        }
                    }
                    accumulate(&mut grads, *a, Tensor::new(y.shape().to_vec(), dx));
                }
                Op::Gelu(a) => {
                    let dx = zip(&g, self.value(*a), |gv, xv| gv * gelu_derivative(xv));
                    accumulate(&mut grads, *a, dx);
                }
                Op::Mse(a, b) => {
                    let scale = g.scalar_value()
                        * T::from_f64(2.0 / self.value(*a).numel() as f64);
                    let da = zip(self.value(*a), self.value(*b), |x, y| scale * (x - y));
                    let db = da.map(|x| -x);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
            }
        }

        let entries = self
            .params
            .iter()
            .map(|(name, id)| {
                let grad = grads[id.0]
                    .take()
                    .unwrap_or_else(|| Tensor::zeros(self.value(*id).shape()));
                (name.clone(), grad)
            })
            .collect();
        Ok(GradMap { entries })
    }
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], id: NodeId, delta: Tensor<T>) {
    match &mut grads[id.0] {
        Some(existing) => {
            for (e, d) in existing.data_mut().iter_mut().zip(delta.data()) {
                *e = *e + *d;
            }
        }
        slot => *slot = Some(delta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gradient() {
        let mut tape = Tape::<f64>::new();
        let x = tape.param("x", Tensor::scalar(3.0));
        let y = tape.mul(x, x);
        let grads = tape.backward(y).unwrap();
        assert_eq!(grads.get("x").unwrap().scalar_value(), 6.0);
    }

    #[test]
    fn unused_param_gets_zero_gradient() {
        let mut tape = Tape::<f64>::new();
        let x = tape.param("x", Tensor::scalar(3.0));
        let _unused = tape.param("unused", Tensor::zeros(&[2, 2]));
        let y = tape.mul(x, x);
        let grads = tape.backward(y).unwrap();
        assert_eq!(grads.get("unused").unwrap().data(), &[0.0; 4]);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut tape = Tape::<f64>::new();
        let x = tape.param("x", Tensor::zeros(&[2, 2]));
        let y = tape.add(x, x);
        assert!(matches!(
            tape.backward(y),
            Err(TensorError::NonScalarLoss(_))
        ));
    }

    #[test]
    fn concat_then_slice_is_identity() {
        let mut tape = Tape::<f64>::new();
        let a = tape.leaf(Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]));
        let b = tape.leaf(Tensor::new(vec![1, 2], vec![5.0, 6.0]));
        let cat = tape.concat(&[a, b], Axis::Rows);
        let back = tape.slice(cat, Axis::Rows, 0, 2);
        assert_eq!(tape.value(back), tape.value(a));
        let back_b = tape.slice(cat, Axis::Rows, 2, 1);
        assert_eq!(tape.value(back_b), tape.value(b));
    }

    #[test]
    fn nan_reported_with_op_name() {
        let mut tape = Tape::<f64>::new();
        let x = tape.param("x", Tensor::scalar(f64::NAN));
        let y = tape.mul(x, x);
        let target = tape.leaf(Tensor::scalar(0.0));
        let z = tape.mse(y, target);
        // NaN from the parameter value surfaces when the mul node's
        // accumulated gradient is popped.
        match tape.backward(z) {
            Err(TensorError::NanInBackward { op }) => assert_eq!(op, "mul"),
            other => panic!("expected NaN error, got {other:?}"),
        }
    }
}
