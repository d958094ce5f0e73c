//! Dense row-major tensors and the numeric kernels used by the model.
//!
//! Every reduction accumulates in ascending index order so results are
//! bit-reproducible across runs and across worker counts.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(Error::Config(format!(
                "precision must be f32 or f64, got {other:?}"
            ))),
        }
    }
}

/// Floating-point element type of a tensor.
pub trait Scalar: Float + Default + Debug + Display + Sum + Send + Sync + 'static {
    const PRECISION: Precision;

    fn lit(v: f64) -> Self;

    fn to_f64_lossy(self) -> f64;
}

impl Scalar for f32 {
    const PRECISION: Precision = Precision::F32;

    fn lit(v: f64) -> Self {
        v as f32
    }

    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    const PRECISION: Precision = Precision::F64;

    fn lit(v: f64) -> Self {
        v
    }

    fn to_f64_lossy(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Dimension(format!(
                "shape {shape:?} has a zero-sized axis"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); n],
        }
    }

    pub fn filled(shape: &[usize], value: T) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn from_f64(shape: Vec<usize>, values: &[f64]) -> Result<Self> {
        Tensor::new(shape, values.iter().map(|&v| T::lit(v)).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn dim(&self, axis: usize) -> usize {
        self.shape[axis]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Row `i` of a rank-2 tensor.
    pub fn row(&self, i: usize) -> &[T] {
        let w = self.shape[1..].iter().product::<usize>();
        &self.data[i * w..(i + 1) * w]
    }
}

fn expect_rank<T: Scalar>(t: &Tensor<T>, rank: usize, what: &str) -> Result<()> {
    if t.rank() != rank {
        return Err(Error::Dimension(format!(
            "{what} must have rank {rank}, got shape {:?}",
            t.shape()
        )));
    }
    Ok(())
}

/// Valid (no padding) stride-1 1-D convolution.
///
/// `input` is `[L, C]`, `filters` is `[F, W, C]`, `bias` is `[F]`; the
/// result is `[L - W + 1, F]`.
pub fn conv1d_forward<T: Scalar>(
    input: &Tensor<T>,
    filters: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    expect_rank(input, 2, "conv input")?;
    expect_rank(filters, 3, "conv filters")?;
    expect_rank(bias, 1, "conv bias")?;
    let (len, channels) = (input.dim(0), input.dim(1));
    let (n_filters, width) = (filters.dim(0), filters.dim(1));
    if filters.dim(2) != channels {
        return Err(Error::Dimension(format!(
            "channel axis mismatch: input axis 1 = {channels}, filters axis 2 = {}",
            filters.dim(2)
        )));
    }
    if bias.dim(0) != n_filters {
        return Err(Error::Dimension(format!(
            "bias axis 0 = {} but filters axis 0 = {n_filters}",
            bias.dim(0)
        )));
    }
    if len < width {
        return Err(Error::EmptyOutput(format!(
            "input length {len} is shorter than filter width {width}"
        )));
    }
    let out_len = len - width + 1;
    let span = width * channels;
    let x = input.data();
    let k = filters.data();
    let b = bias.data();
    let mut out = vec![T::zero(); out_len * n_filters];
    for i in 0..out_len {
        // the receptive field of output row i is contiguous in row-major input
        let window = &x[i * channels..i * channels + span];
        for f in 0..n_filters {
            let kernel = &k[f * span..(f + 1) * span];
            let mut acc = T::zero();
            for (&w, &v) in kernel.iter().zip(window) {
                acc = acc + w * v;
            }
            out[i * n_filters + f] = acc + b[f];
        }
    }
    Tensor::new(vec![out_len, n_filters], out)
}

/// Parameter gradients of [`conv1d_forward`]. The input gradient is not
/// produced since the convolution is always the first layer.
pub fn conv1d_backward<T: Scalar>(
    input: &Tensor<T>,
    filters: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    expect_rank(input, 2, "conv input")?;
    expect_rank(filters, 3, "conv filters")?;
    expect_rank(grad_out, 2, "conv grad_out")?;
    let channels = input.dim(1);
    let (n_filters, width) = (filters.dim(0), filters.dim(1));
    if filters.dim(2) != channels {
        return Err(Error::Dimension(format!(
            "channel axis mismatch: input axis 1 = {channels}, filters axis 2 = {}",
            filters.dim(2)
        )));
    }
    if input.dim(0) < width {
        return Err(Error::EmptyOutput(format!(
            "input length {} is shorter than filter width {width}",
            input.dim(0)
        )));
    }
    let out_len = input.dim(0) - width + 1;
    if grad_out.shape() != [out_len, n_filters] {
        return Err(Error::Dimension(format!(
            "grad_out shape {:?} does not match conv output [{out_len}, {n_filters}]",
            grad_out.shape()
        )));
    }
    let span = width * channels;
    let x = input.data();
    let g = grad_out.data();
    let mut grad_filters = vec![T::zero(); n_filters * span];
    let mut grad_bias = vec![T::zero(); n_filters];
    for i in 0..out_len {
        let window = &x[i * channels..i * channels + span];
        for f in 0..n_filters {
            let go = g[i * n_filters + f];
            // skipping exact zeros leaves every sum unchanged
            if go == T::zero() {
                continue;
            }
            grad_bias[f] = grad_bias[f] + go;
            let slot = &mut grad_filters[f * span..(f + 1) * span];
            for (acc, &v) in slot.iter_mut().zip(window) {
                *acc = *acc + go * v;
            }
        }
    }
    Ok((
        Tensor::new(filters.shape().to_vec(), grad_filters)?,
        Tensor::new(vec![n_filters], grad_bias)?,
    ))
}

/// Per-channel max pooling over `[T, F]`. Returns the pooled tensor and,
/// for each output element, the flat input index of the winner (first
/// occurrence on ties).
pub fn maxpool1d_forward<T: Scalar>(
    input: &Tensor<T>,
    window: usize,
    stride: usize,
) -> Result<(Tensor<T>, Vec<usize>)> {
    expect_rank(input, 2, "pool input")?;
    if window == 0 || stride == 0 {
        return Err(Error::Validation(format!(
            "pool window ({window}) and stride ({stride}) must be >= 1"
        )));
    }
    let (len, channels) = (input.dim(0), input.dim(1));
    if len < window {
        return Err(Error::EmptyOutput(format!(
            "pool input length {len} is shorter than window {window}"
        )));
    }
    let out_len = (len - window) / stride + 1;
    let x = input.data();
    let mut out = Vec::with_capacity(out_len * channels);
    let mut argmax = Vec::with_capacity(out_len * channels);
    for o in 0..out_len {
        let start = o * stride;
        for c in 0..channels {
            let mut best_idx = start * channels + c;
            let mut best = x[best_idx];
            for r in start + 1..start + window {
                let idx = r * channels + c;
                if x[idx] > best {
                    best = x[idx];
                    best_idx = idx;
                }
            }
            out.push(best);
            argmax.push(best_idx);
        }
    }
    Ok((Tensor::new(vec![out_len, channels], out)?, argmax))
}

/// Routes `grad_out` back to the winning positions recorded by
/// [`maxpool1d_forward`].
pub fn maxpool1d_backward<T: Scalar>(
    argmax: &[usize],
    grad_out: &Tensor<T>,
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    if argmax.len() != grad_out.len() {
        return Err(Error::Internal(format!(
            "{} argmax indices for {} gradient entries",
            argmax.len(),
            grad_out.len()
        )));
    }
    let mut grad_in = Tensor::zeros(input_shape);
    let n = grad_in.len();
    let gi = grad_in.data_mut();
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        if idx >= n {
            return Err(Error::Internal(format!(
                "argmax index {idx} out of range for input of {n} elements"
            )));
        }
        gi[idx] = gi[idx] + g;
    }
    Ok(grad_in)
}

/// Single-output affine layer: `bias + Σ weights[d]·input[d]`.
pub fn dense_forward<T: Scalar>(input: &[T], weights: &Tensor<T>, bias: T) -> Result<T> {
    check_dense(input, weights)?;
    let mut acc = T::zero();
    for (&w, &x) in weights.data().iter().zip(input) {
        acc = acc + w * x;
    }
    Ok(acc + bias)
}

/// Returns `(grad_weights, grad_bias, grad_input)` for an upstream
/// gradient `grad_out` on the logit.
pub fn dense_backward<T: Scalar>(
    input: &[T],
    weights: &Tensor<T>,
    grad_out: T,
) -> Result<(Tensor<T>, T, Vec<T>)> {
    check_dense(input, weights)?;
    let gw: Vec<T> = input.iter().map(|&x| grad_out * x).collect();
    let gx: Vec<T> = weights.data().iter().map(|&w| grad_out * w).collect();
    Ok((Tensor::new(weights.shape().to_vec(), gw)?, grad_out, gx))
}

fn check_dense<T: Scalar>(input: &[T], weights: &Tensor<T>) -> Result<()> {
    if weights.rank() != 2 || weights.dim(1) != 1 {
        return Err(Error::Dimension(format!(
            "dense weights must be [D, 1], got {:?}",
            weights.shape()
        )));
    }
    if weights.dim(0) != input.len() {
        return Err(Error::Dimension(format!(
            "dense input has {} features but weights axis 0 = {}",
            input.len(),
            weights.dim(0)
        )));
    }
    Ok(())
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    // both branches avoid exp overflow
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn sigmoid_grad<T: Scalar>(x: T) -> T {
    let s = sigmoid(x);
    s * (T::one() - s)
}

pub fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

pub fn relu_grad<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

pub fn sigmoid_tensor<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    t.map(sigmoid)
}

pub fn relu_tensor<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    t.map(relu)
}
