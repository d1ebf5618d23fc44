//! Dense row-major f32 tensors and the raw forward kernels used by both the
//! inference path and the gradient tape.

use crate::error::{Result, VaradeError};

/// Dense real-valued array with shape metadata. Row-major, contiguous f32.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if expect != data.len() {
            return Err(VaradeError::shape(
                "Tensor::new",
                format!("shape {:?} implies {} values, got {}", shape, expect, data.len()),
            ));
        }
        if shape.iter().any(|&e| e == 0) {
            return Err(VaradeError::shape("Tensor::new", "zero extent"));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn scalar(v: f32) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn from_vec(data: Vec<f32>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn item(&self) -> f32 {
        debug_assert!(self.is_scalar());
        self.data[0]
    }

    /// Same data, new shape. Element count must match.
    pub fn reshaped(&self, shape: Vec<usize>) -> Result<Tensor> {
        Tensor::new(shape, self.data.clone())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

fn check_same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape != b.shape {
        return Err(VaradeError::shape(
            op,
            format!("{:?} vs {:?}", a.shape, b.shape),
        ));
    }
    Ok(())
}

/// Strided convolution, kernel width 2, stride 2.
/// input `[C_in, L]`, weight `[C_out, C_in, 2]`, bias `[C_out]` -> `[C_out, L/2]`.
pub fn conv1d(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (c_in, l) = match input.shape() {
        [c, l] => (*c, *l),
        s => {
            return Err(VaradeError::shape("conv1d", format!("input rank {:?}", s)));
        }
    };
    let (c_out, w_in, k) = match weight.shape() {
        [o, i, k] => (*o, *i, *k),
        s => {
            return Err(VaradeError::shape("conv1d", format!("weight rank {:?}", s)));
        }
    };
    if k != 2 {
        return Err(VaradeError::shape("conv1d", format!("kernel width {k}, expected 2")));
    }
    if w_in != c_in {
        return Err(VaradeError::shape(
            "conv1d",
            format!("weight expects {w_in} input channels, input has {c_in}"),
        ));
    }
    if bias.shape() != [c_out] {
        return Err(VaradeError::shape(
            "conv1d",
            format!("bias shape {:?}, expected [{c_out}]", bias.shape()),
        ));
    }
    if l < 2 || l % 2 != 0 {
        return Err(VaradeError::shape("conv1d", format!("input length {l} must be even and >= 2")));
    }
    let l_out = l / 2;
    let mut out = vec![0.0f32; c_out * l_out];
    let x = input.data();
    let w = weight.data();
    let b = bias.data();
    for o in 0..c_out {
        let w_o = &w[o * c_in * 2..(o + 1) * c_in * 2];
        let out_o = &mut out[o * l_out..(o + 1) * l_out];
        out_o.fill(b[o]);
        for c in 0..c_in {
            let w0 = w_o[c * 2];
            let w1 = w_o[c * 2 + 1];
            let x_c = &x[c * l..(c + 1) * l];
            for t in 0..l_out {
                out_o[t] += w0 * x_c[2 * t] + w1 * x_c[2 * t + 1];
            }
        }
    }
    Tensor::new(vec![c_out, l_out], out)
}

/// Elementwise max(x, 0).
pub fn relu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// Fully connected: x `[F]`, weight `[O, F]`, bias `[O]` -> `[O]`.
pub fn linear(x: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let f = match x.shape() {
        [f] => *f,
        s => return Err(VaradeError::shape("linear", format!("input rank {:?}", s))),
    };
    let (o_dim, w_f) = match weight.shape() {
        [o, wf] => (*o, *wf),
        s => return Err(VaradeError::shape("linear", format!("weight rank {:?}", s))),
    };
    if w_f != f {
        return Err(VaradeError::shape(
            "linear",
            format!("weight expects {w_f} features, input has {f}"),
        ));
    }
    if bias.shape() != [o_dim] {
        return Err(VaradeError::shape(
            "linear",
            format!("bias shape {:?}, expected [{o_dim}]", bias.shape()),
        ));
    }
    let xd = x.data();
    let wd = weight.data();
    let mut out = Vec::with_capacity(o_dim);
    for o in 0..o_dim {
        let row = &wd[o * f..(o + 1) * f];
        let mut acc = bias.data()[o];
        for (wv, xv) in row.iter().zip(xd) {
            acc += wv * xv;
        }
        out.push(acc);
    }
    Tensor::new(vec![o_dim], out)
}

/// Elementwise binary helpers used by the tape.
pub(crate) fn ew_add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_same_shape("add", a, b)?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    Tensor::new(a.shape().to_vec(), data)
}

pub(crate) fn ew_sub(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_same_shape("sub", a, b)?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect();
    Tensor::new(a.shape().to_vec(), data)
}

pub(crate) fn ew_mul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_same_shape("mul", a, b)?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    Tensor::new(a.shape().to_vec(), data)
}
