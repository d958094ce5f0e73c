//! conv(F filters, width W) → activation → maxpool → flatten → dense(1) →
//! sigmoid, trained with mean binary cross-entropy.

mod adam;
mod checkpoint;

pub use adam::{AdamHyper, AdamState};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::Batch;
use crate::rng::SimRng;
use crate::tensor::{
    conv1d_backward, conv1d_forward, dense_forward, maxpool1d_backward, maxpool1d_forward, relu,
    relu_grad, sigmoid, Scalar, Tensor,
};

pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Linear,
}

impl Activation {
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => relu(x),
            Activation::Linear => x,
        }
    }

    fn grad<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => relu_grad(x),
            Activation::Linear => T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub n_filters: usize,
    pub filter_width: usize,
    pub pool_window: usize,
    pub pool_stride: usize,
    pub conv_activation: Activation,
    pub seq_length: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_filters: 15,
            filter_width: 10,
            pool_window: 35,
            pool_stride: 35,
            conv_activation: Activation::Relu,
            seq_length: 1500,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_filters", self.n_filters),
            ("filter_width", self.filter_width),
            ("pool_window", self.pool_window),
            ("pool_stride", self.pool_stride),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if self.seq_length < self.filter_width {
            return Err(Error::Config(format!(
                "seq_length {} is shorter than filter_width {}",
                self.seq_length, self.filter_width
            )));
        }
        if self.conv_len() < self.pool_window {
            return Err(Error::Config(format!(
                "conv output length {} is shorter than pool_window {}",
                self.conv_len(),
                self.pool_window
            )));
        }
        Ok(())
    }

    pub fn conv_len(&self) -> usize {
        self.seq_length + 1 - self.filter_width
    }

    pub fn pooled_len(&self) -> usize {
        (self.conv_len() - self.pool_window) / self.pool_stride + 1
    }

    /// Length of the flattened feature vector fed to the dense layer.
    pub fn flat_dim(&self) -> usize {
        self.pooled_len() * self.n_filters
    }

    pub fn param_count(&self) -> usize {
        self.n_filters * self.filter_width * 4 + self.n_filters + self.flat_dim() + 1
    }
}

/// The four parameter tensors. Also used for gradients, which share the
/// shapes exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T> {
    /// `[F, W, 4]`
    pub conv_filters: Tensor<T>,
    /// `[F]`
    pub conv_bias: Tensor<T>,
    /// `[D, 1]`
    pub dense_weights: Tensor<T>,
    pub dense_bias: T,
}

pub type ModelParams<T> = ParamSet<T>;
pub type Gradients<T> = ParamSet<T>;

impl<T: Scalar> ParamSet<T> {
    pub fn zeros(config: &ModelConfig) -> Self {
        ParamSet {
            conv_filters: Tensor::zeros(&[config.n_filters, config.filter_width, 4]),
            conv_bias: Tensor::zeros(&[config.n_filters]),
            dense_weights: Tensor::zeros(&[config.flat_dim(), 1]),
            dense_bias: T::zero(),
        }
    }

    pub fn len(&self) -> usize {
        self.conv_filters.len() + self.conv_bias.len() + self.dense_weights.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Canonical order: conv_filters, conv_bias, dense_weights, dense_bias.
    pub fn flatten(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(self.conv_filters.data());
        v.extend_from_slice(self.conv_bias.data());
        v.extend_from_slice(self.dense_weights.data());
        v.push(self.dense_bias);
        v
    }

    /// Rebuilds a set with the same shapes as `self` from a flat vector.
    pub fn unflatten_like(&self, flat: &[T]) -> Result<Self> {
        let mut out = self.clone();
        out.assign_flat(flat)?;
        Ok(out)
    }

    pub fn unflatten(config: &ModelConfig, flat: &[T]) -> Result<Self> {
        ParamSet::zeros(config).unflatten_like(flat)
    }

    /// In-place variant of [`ParamSet::unflatten_like`].
    pub fn assign_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::Dimension(format!(
                "flat vector has {} elements, parameter set needs {}",
                flat.len(),
                self.len()
            )));
        }
        let (a, rest) = flat.split_at(self.conv_filters.len());
        let (b, rest) = rest.split_at(self.conv_bias.len());
        let (c, d) = rest.split_at(self.dense_weights.len());
        self.conv_filters.data_mut().copy_from_slice(a);
        self.conv_bias.data_mut().copy_from_slice(b);
        self.dense_weights.data_mut().copy_from_slice(c);
        self.dense_bias = d[0];
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.conv_filters.is_finite()
            && self.conv_bias.is_finite()
            && self.dense_weights.is_finite()
            && self.dense_bias.is_finite()
    }

    /// Infers the architecture-defining shapes and checks them against
    /// `config`.
    pub fn check_against(&self, config: &ModelConfig) -> Result<()> {
        let expect = |name: &str, got: &[usize], want: &[usize]| {
            if got != want {
                Err(Error::Dimension(format!(
                    "{name} has shape {got:?}, model config expects {want:?}"
                )))
            } else {
                Ok(())
            }
        };
        expect(
            "conv_filters",
            self.conv_filters.shape(),
            &[config.n_filters, config.filter_width, 4],
        )?;
        expect("conv_bias", self.conv_bias.shape(), &[config.n_filters])?;
        expect("dense_weights", self.dense_weights.shape(), &[config.flat_dim(), 1])
    }
}

fn glorot<T: Scalar>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut SimRng) -> Tensor<T> {
    let bound = glorot_bound(fan_in, fan_out);
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| T::lit((rng.next_f64() * 2.0 - 1.0) * bound))
        .collect();
    Tensor::new(shape.to_vec(), data).expect("shape product matches")
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Glorot-uniform weights and zero biases. Conv fans follow the usual
/// receptive-field convention: `fan_in = W·4`, `fan_out = W·F`.
pub fn init_params<T: Scalar>(config: &ModelConfig, seed: u64) -> Result<ModelParams<T>> {
    config.validate()?;
    let mut rng = SimRng::derived(seed, 0x1417);
    let (f, w) = (config.n_filters, config.filter_width);
    Ok(ParamSet {
        conv_filters: glorot(&[f, w, 4], w * 4, w * f, &mut rng),
        conv_bias: Tensor::zeros(&[f]),
        dense_weights: glorot(&[config.flat_dim(), 1], config.flat_dim(), 1, &mut rng),
        dense_bias: T::zero(),
    })
}

/// Everything [`backward`] needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    inputs: Tensor<T>,
    /// `[B, D]` flattened pooled activations.
    features: Vec<T>,
    /// Per-sample argmax into the `[conv_len, F]` conv output.
    argmax: Vec<usize>,
    /// Pre-activation conv value at each argmax.
    winner_pre: Vec<T>,
    probs: Vec<T>,
    config: ModelConfig,
}

impl<T> ForwardCache<T> {
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn batch_size(&self) -> usize {
        self.probs.len()
    }
}

fn check_batch<T: Scalar>(config: &ModelConfig, batch: &Batch<T>) -> Result<()> {
    if batch.seq_length() != config.seq_length {
        return Err(Error::Dimension(format!(
            "batch sequence length {} does not match model seq_length {}",
            batch.seq_length(),
            config.seq_length
        )));
    }
    Ok(())
}

/// Logit and pooling bookkeeping for a single `[L, 4]` sample.
fn forward_sample<T: Scalar>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    sample: &[T],
) -> Result<(T, Vec<T>, Vec<usize>, Vec<T>)> {
    let input = Tensor::new(vec![config.seq_length, 4], sample.to_vec())?;
    let pre = conv1d_forward(&input, &params.conv_filters, &params.conv_bias)?;
    let act = pre.map(|v| config.conv_activation.apply(v));
    let (pooled, argmax) = maxpool1d_forward(&act, config.pool_window, config.pool_stride)?;
    let winner_pre = argmax.iter().map(|&i| pre.data()[i]).collect();
    let features = pooled.into_data();
    let logit = dense_forward(&features, &params.dense_weights, params.dense_bias)?;
    Ok((logit, features, argmax, winner_pre))
}

/// Logits only, without keeping a cache.
pub fn logits<T: Scalar>(params: &ModelParams<T>, config: &ModelConfig, batch: &Batch<T>) -> Result<Vec<T>> {
    check_batch(config, batch)?;
    (0..batch.size())
        .map(|i| forward_sample(params, config, batch.sample(i)).map(|r| r.0))
        .collect()
}

/// Probabilities only, without keeping a cache.
pub fn predict<T: Scalar>(params: &ModelParams<T>, config: &ModelConfig, batch: &Batch<T>) -> Result<Vec<T>> {
    Ok(logits(params, config, batch)?.into_iter().map(sigmoid).collect())
}

pub fn forward<T: Scalar>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    batch: &Batch<T>,
) -> Result<(Vec<T>, ForwardCache<T>)> {
    check_batch(config, batch)?;
    let b = batch.size();
    let d = config.flat_dim();
    let mut cache = ForwardCache {
        inputs: batch.inputs.clone(),
        features: Vec::with_capacity(b * d),
        argmax: Vec::with_capacity(b * d),
        winner_pre: Vec::with_capacity(b * d),
        probs: Vec::with_capacity(b),
        config: *config,
    };
    for i in 0..b {
        let (logit, features, argmax, winner_pre) = forward_sample(params, config, batch.sample(i))?;
        cache.features.extend(features);
        cache.argmax.extend(argmax);
        cache.winner_pre.extend(winner_pre);
        cache.probs.push(sigmoid(logit));
    }
    Ok((cache.probs.clone(), cache))
}

fn check_labels<T: Scalar>(probs: &[T], labels: &[T]) -> Result<()> {
    if probs.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} probabilities for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::Dimension("loss of an empty batch".into()));
    }
    if let Some(y) = labels.iter().find(|&&y| y != T::zero() && y != T::one()) {
        return Err(Error::Validation(format!("label {y} is not 0 or 1")));
    }
    Ok(())
}

fn clamp_prob<T: Scalar>(p: T) -> T {
    let lo = T::lit(PROB_CLAMP);
    let hi = T::one() - lo;
    p.max(lo).min(hi)
}

/// Mean binary cross-entropy on probabilities clamped to `[1e-7, 1 - 1e-7]`.
pub fn bce_loss<T: Scalar>(probs: &[T], labels: &[T]) -> Result<T> {
    check_labels(probs, labels)?;
    let mut acc = T::zero();
    for (&p, &y) in probs.iter().zip(labels) {
        let p = clamp_prob(p);
        acc = acc + y * p.ln() + (T::one() - y) * (T::one() - p).ln();
    }
    Ok(-acc / T::lit(probs.len() as f64))
}

/// d(loss)/d(p_i) on clamped probabilities.
pub fn bce_grad<T: Scalar>(probs: &[T], labels: &[T]) -> Result<Vec<T>> {
    check_labels(probs, labels)?;
    let n = T::lit(probs.len() as f64);
    Ok(probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = clamp_prob(p);
            (p - y) / (p * (T::one() - p)) / n
        })
        .collect())
}

/// Exact gradients of mean BCE, using the fused sigmoid+BCE form
/// `d(loss)/d(logit_i) = (p_i - y_i) / B`.
pub fn backward<T: Scalar>(
    params: &ModelParams<T>,
    cache: &ForwardCache<T>,
    labels: &[T],
) -> Result<Gradients<T>> {
    let config = &cache.config;
    let b = cache.batch_size();
    if labels.len() != b {
        return Err(Error::Internal(format!(
            "stale cache: forward saw {b} samples, backward got {} labels",
            labels.len()
        )));
    }
    params.check_against(config).map_err(|e| {
        Error::Internal(format!("stale cache: parameters no longer match the forward pass ({e})"))
    })?;
    if let Some(y) = labels.iter().find(|&&y| y != T::zero() && y != T::one()) {
        return Err(Error::Validation(format!("label {y} is not 0 or 1")));
    }
    let d = config.flat_dim();
    let f = config.n_filters;
    let scale = T::lit(b as f64);
    let mut grads = Gradients::zeros(config);
    let dense_w = params.dense_weights.data();
    let sample_len = config.seq_length * 4;
    for i in 0..b {
        let dlogit = (cache.probs[i] - labels[i]) / scale;
        let feats = &cache.features[i * d..(i + 1) * d];
        for (gw, &x) in grads.dense_weights.data_mut().iter_mut().zip(feats) {
            *gw = *gw + dlogit * x;
        }
        grads.dense_bias = grads.dense_bias + dlogit;

        let pre = &cache.winner_pre[i * d..(i + 1) * d];
        let pooled_grad: Vec<T> = dense_w
            .iter()
            .zip(pre)
            .map(|(&w, &z)| dlogit * w * config.conv_activation.grad(z))
            .collect();
        let pooled_grad = Tensor::new(vec![config.pooled_len(), f], pooled_grad)?;
        let conv_grad = maxpool1d_backward(
            &cache.argmax[i * d..(i + 1) * d],
            &pooled_grad,
            &[config.conv_len(), f],
        )?;
        let input = Tensor::new(
            vec![config.seq_length, 4],
            cache.inputs.data()[i * sample_len..(i + 1) * sample_len].to_vec(),
        )?;
        let (gk, gb) = conv1d_backward(&input, &params.conv_filters, &conv_grad)?;
        for (acc, &g) in grads.conv_filters.data_mut().iter_mut().zip(gk.data()) {
            *acc = *acc + g;
        }
        for (acc, &g) in grads.conv_bias.data_mut().iter_mut().zip(gb.data()) {
            *acc = *acc + g;
        }
    }
    Ok(grads)
}

/// Mean loss and gradients for one microbatch.
pub fn loss_and_grads<T: Scalar>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    batch: &Batch<T>,
) -> Result<(T, Gradients<T>)> {
    let (probs, cache) = forward(params, config, batch)?;
    let loss = bce_loss(&probs, batch.labels.data())?;
    let grads = backward(params, &cache, batch.labels.data())?;
    Ok((loss, grads))
}
