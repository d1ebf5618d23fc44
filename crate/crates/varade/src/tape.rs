//! Reverse-mode gradient tape covering exactly the operations the model and
//! loss need. No control flow, no broadcasting, no higher-order gradients.

use crate::error::{Result, VaradeError};
use crate::tensor::{self, Tensor};

/// Handle to a value recorded on a [`GradTape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Conv1d { input: ValueId, weight: ValueId, bias: ValueId },
    Relu { input: ValueId },
    Linear { input: ValueId, weight: ValueId, bias: ValueId },
    Add(ValueId, ValueId),
    Sub(ValueId, ValueId),
    Mul(ValueId, ValueId),
    Exp(ValueId),
    Scale(ValueId, f32),
    AddScalar(ValueId),
    Clamp { input: ValueId, lo: f32, hi: f32 },
    Mean(ValueId),
    Reshape { input: ValueId },
    Slice { input: ValueId, start: usize, len: usize },
}

struct Node {
    op: Op,
    value: Tensor,
}

/// Ordered record of executed operations; replayed backwards for adjoints.
/// Single-threaded: one training step owns one tape.
#[derive(Default)]
pub struct GradTape {
    nodes: Vec<Node>,
}

impl GradTape {
    pub fn new() -> Self {
        GradTape { nodes: Vec::new() }
    }

    fn push(&mut self, op: Op, value: Tensor) -> ValueId {
        self.nodes.push(Node { op, value });
        ValueId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: ValueId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Registers an input or parameter tensor.
    pub fn leaf(&mut self, value: Tensor) -> ValueId {
        self.push(Op::Leaf, value)
    }

    pub fn conv1d(&mut self, input: ValueId, weight: ValueId, bias: ValueId) -> Result<ValueId> {
        let v = tensor::conv1d(self.value(input), self.value(weight), self.value(bias))?;
        Ok(self.push(Op::Conv1d { input, weight, bias }, v))
    }

    pub fn relu(&mut self, input: ValueId) -> ValueId {
        let v = tensor::relu(self.value(input));
        self.push(Op::Relu { input }, v)
    }

    pub fn linear(&mut self, input: ValueId, weight: ValueId, bias: ValueId) -> Result<ValueId> {
        let v = tensor::linear(self.value(input), self.value(weight), self.value(bias))?;
        Ok(self.push(Op::Linear { input, weight, bias }, v))
    }

    pub fn add(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        let v = tensor::ew_add(self.value(a), self.value(b))?;
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn sub(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        let v = tensor::ew_sub(self.value(a), self.value(b))?;
        Ok(self.push(Op::Sub(a, b), v))
    }

    pub fn mul(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        let v = tensor::ew_mul(self.value(a), self.value(b))?;
        Ok(self.push(Op::Mul(a, b), v))
    }

    pub fn exp(&mut self, a: ValueId) -> ValueId {
        let mut v = self.value(a).clone();
        for x in v.data_mut() {
            *x = x.exp();
        }
        self.push(Op::Exp(a), v)
    }

    pub fn scale(&mut self, a: ValueId, c: f32) -> ValueId {
        let mut v = self.value(a).clone();
        for x in v.data_mut() {
            *x *= c;
        }
        self.push(Op::Scale(a, c), v)
    }

    pub fn add_scalar(&mut self, a: ValueId, c: f32) -> ValueId {
        let mut v = self.value(a).clone();
        for x in v.data_mut() {
            *x += c;
        }
        self.push(Op::AddScalar(a), v)
    }

    pub fn clamp(&mut self, input: ValueId, lo: f32, hi: f32) -> ValueId {
        let mut v = self.value(input).clone();
        for x in v.data_mut() {
            *x = x.clamp(lo, hi);
        }
        self.push(Op::Clamp { input, lo, hi }, v)
    }

    /// Mean over all elements, producing a scalar.
    pub fn mean(&mut self, a: ValueId) -> ValueId {
        let src = self.value(a);
        let m = src.data().iter().sum::<f32>() / src.len() as f32;
        self.push(Op::Mean(a), Tensor::scalar(m))
    }

    pub fn reshape(&mut self, input: ValueId, shape: Vec<usize>) -> Result<ValueId> {
        let v = self.value(input).reshaped(shape)?;
        Ok(self.push(Op::Reshape { input }, v))
    }

    /// Contiguous 1-D slice `[start, start+len)` of a rank-1 value.
    pub fn slice(&mut self, input: ValueId, start: usize, len: usize) -> Result<ValueId> {
        let src = self.value(input);
        if src.shape().len() != 1 || start + len > src.len() {
            return Err(VaradeError::shape(
                "slice",
                format!("[{start}, {}) out of rank-1 [{}]", start + len, src.len()),
            ));
        }
        let v = Tensor::from_vec(src.data()[start..start + len].to_vec());
        Ok(self.push(Op::Slice { input, start, len }, v))
    }

    /// Reverse pass from a scalar loss. Every recorded value gets an adjoint;
    /// values not on a path to the loss end up with zeros.
    pub fn backward(&self, loss: ValueId) -> Result<Gradients> {
        if !self.value(loss).is_scalar() {
            return Err(VaradeError::shape(
                "backward",
                format!("loss must be scalar, got {:?}", self.value(loss).shape()),
            ));
        }
        let mut grads: Vec<Tensor> = self
            .nodes
            .iter()
            .map(|n| Tensor::zeros(n.value.shape().to_vec()))
            .collect();
        grads[loss.0].data_mut()[0] = 1.0;

        for idx in (0..=loss.0).rev() {
            let g = grads[idx].clone();
            if g.data().iter().all(|&v| v == 0.0) {
                continue;
            }
            match &self.nodes[idx].op {
                Op::Leaf => {}
                Op::Conv1d { input, weight, bias } => {
                    let x = self.value(*input);
                    let w = self.value(*weight);
                    let (c_in, l) = (x.shape()[0], x.shape()[1]);
                    let c_out = w.shape()[0];
                    let l_out = l / 2;
                    let gd = g.data().to_vec();
                    {
                        let gi = grads[input.0].data_mut();
                        for o in 0..c_out {
                            for c in 0..c_in {
                                let w0 = w.data()[(o * c_in + c) * 2];
                                let w1 = w.data()[(o * c_in + c) * 2 + 1];
                                for t in 0..l_out {
                                    let go = gd[o * l_out + t];
                                    gi[c * l + 2 * t] += w0 * go;
                                    gi[c * l + 2 * t + 1] += w1 * go;
                                }
                            }
                        }
                    }
                    {
                        let gw = grads[weight.0].data_mut();
                        for o in 0..c_out {
                            for c in 0..c_in {
                                let mut a0 = 0.0f32;
                                let mut a1 = 0.0f32;
                                for t in 0..l_out {
                                    let go = gd[o * l_out + t];
                                    a0 += x.data()[c * l + 2 * t] * go;
                                    a1 += x.data()[c * l + 2 * t + 1] * go;
                                }
                                gw[(o * c_in + c) * 2] += a0;
                                gw[(o * c_in + c) * 2 + 1] += a1;
                            }
                        }
                    }
                    {
                        let gb = grads[bias.0].data_mut();
                        for o in 0..c_out {
                            gb[o] += gd[o * l_out..(o + 1) * l_out].iter().sum::<f32>();
                        }
                    }
                }
                Op::Relu { input } => {
                    let x = self.value(*input);
                    let gi = grads[input.0].data_mut();
                    // subgradient 0 at the kink
                    for ((gi_v, x_v), g_v) in gi.iter_mut().zip(x.data()).zip(g.data()) {
                        if *x_v > 0.0 {
                            *gi_v += g_v;
                        }
                    }
                }
                Op::Linear { input, weight, bias } => {
                    let x = self.value(*input);
                    let w = self.value(*weight);
                    let f = x.len();
                    let o_dim = w.shape()[0];
                    {
                        let gi = grads[input.0].data_mut();
                        for o in 0..o_dim {
                            let go = g.data()[o];
                            let row = &w.data()[o * f..(o + 1) * f];
                            for (gi_v, w_v) in gi.iter_mut().zip(row) {
                                *gi_v += w_v * go;
                            }
                        }
                    }
                    {
                        let gw = grads[weight.0].data_mut();
                        for o in 0..o_dim {
                            let go = g.data()[o];
                            for (i, x_v) in x.data().iter().enumerate() {
                                gw[o * f + i] += x_v * go;
                            }
                        }
                    }
                    {
                        let gb = grads[bias.0].data_mut();
                        for (gb_v, g_v) in gb.iter_mut().zip(g.data()) {
                            *gb_v += g_v;
                        }
                    }
                }
                Op::Add(a, b) => {
                    for (gv, g_v) in grads[a.0].data_mut().iter_mut().zip(g.data()) {
                        *gv += g_v;
                    }
                    for (gv, g_v) in grads[b.0].data_mut().iter_mut().zip(g.data()) {
                        *gv += g_v;
                    }
                }
                Op::Sub(a, b) => {
                    for (gv, g_v) in grads[a.0].data_mut().iter_mut().zip(g.data()) {
                        *gv += g_v;
                    }
                    for (gv, g_v) in grads[b.0].data_mut().iter_mut().zip(g.data()) {
                        *gv -= g_v;
                    }
                }
                Op::Mul(a, b) => {
                    let av = self.value(*a).data().to_vec();
                    let bv = self.value(*b).data().to_vec();
                    for ((gv, b_v), g_v) in grads[a.0].data_mut().iter_mut().zip(&bv).zip(g.data()) {
                        *gv += b_v * g_v;
                    }
                    for ((gv, a_v), g_v) in grads[b.0].data_mut().iter_mut().zip(&av).zip(g.data()) {
                        *gv += a_v * g_v;
                    }
                }
                Op::Exp(a) => {
                    let out = self.nodes[idx].value.data().to_vec();
                    for ((gv, o_v), g_v) in grads[a.0].data_mut().iter_mut().zip(&out).zip(g.data()) {
                        *gv += o_v * g_v;
                    }
                }
                Op::Scale(a, c) => {
                    for (gv, g_v) in grads[a.0].data_mut().iter_mut().zip(g.data()) {
                        *gv += c * g_v;
                    }
                }
                Op::AddScalar(a) => {
                    for (gv, g_v) in grads[a.0].data_mut().iter_mut().zip(g.data()) {
                        *gv += g_v;
                    }
                }
                Op::Clamp { input, lo, hi } => {
                    let x = self.value(*input);
                    let gi = grads[input.0].data_mut();
                    for ((gv, x_v), g_v) in gi.iter_mut().zip(x.data()).zip(g.data()) {
                        if *x_v >= *lo && *x_v <= *hi {
                            *gv += g_v;
                        }
                    }
                }
                Op::Mean(a) => {
                    let n = self.value(*a).len() as f32;
                    let go = g.data()[0] / n;
                    for gv in grads[a.0].data_mut() {
                        *gv += go;
                    }
                }
                Op::Reshape { input } => {
                    for (gv, g_v) in grads[input.0].data_mut().iter_mut().zip(g.data()) {
                        *gv += g_v;
                    }
                }
                Op::Slice { input, start, len } => {
                    let gi = grads[input.0].data_mut();
                    for (gv, g_v) in gi[*start..*start + *len].iter_mut().zip(g.data()) {
                        *gv += g_v;
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Adjoints per tape value, indexed by [`ValueId`].
pub struct Gradients {
    grads: Vec<Tensor>,
}

impl Gradients {
    pub fn get(&self, id: ValueId) -> &Tensor {
        &self.grads[id.0]
    }

    pub fn take(&mut self, id: ValueId) -> Tensor {
        std::mem::replace(&mut self.grads[id.0], Tensor::scalar(0.0))
    }
}
