//! Binary checkpoint format.
//!
//! ```text
//! "DCNN" | u32 version (=1)
//! repeated: u16 name_len | name (utf-8) | u8 rank | u32 dims[rank] | f32 data[prod(dims)]
//! ```
//!
//! All integers and floats are little-endian. Besides the four parameter
//! tensors a `model_config` tensor of rank 1 stores
//! `[seq_length, filter_width, n_filters, pool_window, pool_stride, activation]`
//! (activation: 0 = relu, 1 = linear) so a checkpoint is self-describing.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{Activation, ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DCNN";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_tensor(out: &mut Vec<u8>, name: &str, dims: &[usize], data: impl Iterator<Item = f32>) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.push(dims.len() as u8);
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_checkpoint<T: Scalar>(params: &ModelParams<T>, config: &ModelConfig) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let f32s = |t: &Tensor<T>| t.data().iter().map(|v| v.to_f64_lossy() as f32).collect::<Vec<_>>();
    put_tensor(&mut out, "conv_filters", params.conv_filters.shape(), f32s(&params.conv_filters).into_iter());
    put_tensor(&mut out, "conv_bias", params.conv_bias.shape(), f32s(&params.conv_bias).into_iter());
    put_tensor(&mut out, "dense_weights", params.dense_weights.shape(), f32s(&params.dense_weights).into_iter());
    put_tensor(&mut out, "dense_bias", &[1], std::iter::once(params.dense_bias.to_f64_lossy() as f32));
    let activation = match config.conv_activation {
        Activation::Relu => 0.0,
        Activation::Linear => 1.0,
    };
    let meta = [
        config.seq_length as f32,
        config.filter_width as f32,
        config.n_filters as f32,
        config.pool_window as f32,
        config.pool_stride as f32,
        activation,
    ];
    put_tensor(&mut out, "model_config", &[meta.len()], meta.into_iter());
    out
}

pub fn save_checkpoint<T: Scalar>(params: &ModelParams<T>, config: &ModelConfig, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(params, config)).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Checkpoint(format!("truncated while reading {field}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, field: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, field)?.try_into().unwrap()))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<(ModelConfig, ModelParams<T>)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if bytes.len() < 4 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint (bad magic bytes)".into()));
    }
    r.pos = 4;
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let mut tensors: BTreeMap<String, (Vec<usize>, Vec<f32>)> = BTreeMap::new();
    while !r.done() {
        let name_len = u16::from_le_bytes(r.take(2, "name length")?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| Error::Checkpoint("tensor name is not utf-8".into()))?
            .to_string();
        let rank = r.take(1, &format!("{name} rank"))?[0] as usize;
        let dims = (0..rank)
            .map(|_| r.u32(&format!("{name} dims")).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = dims.iter().product();
        let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::Checkpoint(format!("{name} dims overflow")))?, &format!("{name} data"))?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.insert(name, (dims, data));
    }
    let mut get = |name: &str| {
        tensors
            .remove(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))
    };
    let (_, meta) = get("model_config")?;
    if meta.len() != 6 {
        return Err(Error::Checkpoint(format!(
            "model_config has {} entries, expected 6",
            meta.len()
        )));
    }
    let config = ModelConfig {
        seq_length: meta[0] as usize,
        filter_width: meta[1] as usize,
        n_filters: meta[2] as usize,
        pool_window: meta[3] as usize,
        pool_stride: meta[4] as usize,
        conv_activation: match meta[5] as u32 {
            0 => Activation::Relu,
            1 => Activation::Linear,
            other => {
                return Err(Error::Checkpoint(format!("model_config activation code {other}")))
            }
        },
    };
    config
        .validate()
        .map_err(|e| Error::Checkpoint(format!("model_config: {e}")))?;
    let mut tensor = |name: &str, want: Vec<usize>| -> Result<Tensor<T>> {
        let (dims, data) = get(name)?;
        if dims != want {
            return Err(Error::Checkpoint(format!(
                "{name} has shape {dims:?}, expected {want:?}"
            )));
        }
        Tensor::new(dims, data.into_iter().map(|v| T::lit(v as f64)).collect())
    };
    let conv_filters = tensor("conv_filters", vec![config.n_filters, config.filter_width, 4])?;
    let conv_bias = tensor("conv_bias", vec![config.n_filters])?;
    let dense_weights = tensor("dense_weights", vec![config.flat_dim(), 1])?;
    let dense_bias = tensor("dense_bias", vec![1])?.data()[0];
    Ok((
        config,
        ModelParams {
            conv_filters,
            conv_bias,
            dense_weights,
            dense_bias,
        },
    ))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(ModelConfig, ModelParams<T>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
