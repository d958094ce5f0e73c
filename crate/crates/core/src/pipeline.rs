//! From records to training batches: one-hot encoding, stratified
//! splitting, buffered shuffling, fixed-size batching and sharding.


use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome_sim::{base_index, SequenceRecord, BASES};
use crate::rng::SimRng;
use crate::tensor::{Scalar, Tensor};

/// `[L, 4]` indicator matrix with columns A, C, G, T.
pub fn one_hot<T: Scalar>(bases: &str) -> Result<Tensor<T>> {
    if bases.is_empty() {
        return Err(Error::Dimension("cannot encode an empty sequence".into()));
    }
    let mut data = vec![T::zero(); bases.len() * 4];
    encode_into(bases, &mut data)?;
    Tensor::new(vec![bases.len(), 4], data)
}

fn encode_into<T: Scalar>(bases: &str, out: &mut [T]) -> Result<()> {
    for (i, b) in bases.bytes().enumerate() {
        let k = base_index(b).ok_or(Error::Encode {
            position: i,
            found: b as char,
        })?;
        out[i * 4 + k] = T::one();
    }
    Ok(())
}

/// Inverse of [`one_hot`]; fails on rows that are not exactly one-hot.
pub fn decode<T: Scalar>(encoded: &Tensor<T>) -> Result<String> {
    if encoded.rank() != 2 || encoded.dim(1) != 4 {
        return Err(Error::Dimension(format!(
            "expected [L, 4], got {:?}",
            encoded.shape()
        )));
    }
    let mut s = String::with_capacity(encoded.dim(0));
    for i in 0..encoded.dim(0) {
        let row = encoded.row(i);
        let hot: Vec<usize> = (0..4).filter(|&k| row[k] == T::one()).collect();
        let zeros = row.iter().filter(|&&v| v == T::zero()).count();
        if hot.len() != 1 || zeros != 3 {
            return Err(Error::Validation(format!("row {i} is not one-hot")));
        }
        s.push(BASES[hot[0]] as char);
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub test_fraction: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.70,
            test_fraction: 0.10,
            validation_fraction: 0.20,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let f = [self.train_fraction, self.test_fraction, self.validation_fraction];
        if f.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::Config(format!("split fractions must be >= 0: {f:?}")));
        }
        let s: f64 = f.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions sum to {s}, not 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits {
    pub train: Vec<SequenceRecord>,
    pub test: Vec<SequenceRecord>,
    pub validation: Vec<SequenceRecord>,
}

fn floor_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction) + 1e-9).floor() as usize
}

/// Stratified, seeded split: each label class is shuffled and partitioned
/// separately (floor for train and test, remainder to validation), then
/// every split is shuffled so classes interleave.
pub fn split(records: &[SequenceRecord], spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let mut rng = SimRng::derived(spec.seed, 0x0005_9117);
    let mut out = Splits::default();
    for label in [0u8, 1u8] {
        let mut class: Vec<&SequenceRecord> = records.iter().filter(|r| r.label == label).collect();
        rng.shuffle(&mut class);
        let n = class.len();
        let n_train = floor_count(n, spec.train_fraction);
        let n_test = floor_count(n, spec.test_fraction).min(n - n_train);
        out.train.extend(class[..n_train].iter().map(|&r| r.clone()));
        out.test.extend(class[n_train..n_train + n_test].iter().map(|&r| r.clone()));
        out.validation.extend(class[n_train + n_test..].iter().map(|&r| r.clone()));
    }
    rng.shuffle(&mut out.train);
    rng.shuffle(&mut out.test);
    rng.shuffle(&mut out.validation);
    Ok(out)
}

/// Streaming buffer shuffle: keep up to `buffer` pending items, emit a
/// uniformly chosen one and refill its slot from the source.
pub struct ShuffleStream<I: Iterator> {
    source: I,
    buffer: Vec<I::Item>,
    rng: SimRng,
}

impl<I: Iterator> Iterator for ShuffleStream<I> {
    type Item = I::Item;

    fn next(&mut self) -> Option<I::Item> {
        if self.buffer.is_empty() {
            return None;
        }
        let k = self.rng.below(self.buffer.len());
        match self.source.next() {
            Some(fresh) => Some(std::mem::replace(&mut self.buffer[k], fresh)),
            None => Some(self.buffer.swap_remove(k)),
        }
    }
}

pub fn shuffled_stream<I: IntoIterator>(
    items: I,
    shuffle_buffer_size: usize,
    seed: u64,
) -> ShuffleStream<I::IntoIter> {
    let cap = shuffle_buffer_size.max(1);
    let mut source = items.into_iter();
    let buffer: Vec<I::Item> = source.by_ref().take(cap).collect();
    ShuffleStream {
        source,
        buffer,
        rng: SimRng::new(seed),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Read-ahead cap; has no effect on in-memory datasets.
    pub buffer_size: usize,
    pub shuffle_buffer_size: usize,
    pub batch_per_replica: usize,
    pub n_replicas: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            buffer_size: 10_000,
            shuffle_buffer_size: 100,
            batch_per_replica: 64,
            n_replicas: 1,
        }
    }
}

impl PipelineConfig {
    pub fn global_batch(&self) -> usize {
        self.batch_per_replica * self.n_replicas
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("buffer_size", self.buffer_size),
            ("shuffle_buffer_size", self.shuffle_buffer_size),
            ("batch_per_replica", self.batch_per_replica),
            ("n_replicas", self.n_replicas),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }
}

/// Per-replica batch size for a requested global batch.
pub fn per_replica(global_batch: usize, n_replicas: usize) -> Result<usize> {
    if n_replicas == 0 || global_batch == 0 || global_batch % n_replicas != 0 {
        return Err(Error::Config(format!(
            "the batch size must be divisible by the number of replicas \
             (global batch {global_batch}, {n_replicas} replicas)"
        )));
    }
    Ok(global_batch / n_replicas)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    /// `[B, L, 4]`
    pub inputs: Tensor<T>,
    /// `[B]`, values in {0, 1}
    pub labels: Tensor<T>,
}

impl<T: Scalar> Batch<T> {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a SequenceRecord>) -> Result<Self> {
        let records: Vec<&SequenceRecord> = records.into_iter().collect();
        let first = records
            .first()
            .ok_or_else(|| Error::Dimension("a batch needs at least one record".into()))?;
        let len = first.bases.len();
        let mut data = vec![T::zero(); records.len() * len * 4];
        for (b, r) in records.iter().enumerate() {
            if r.bases.len() != len {
                return Err(Error::Dimension(format!(
                    "record {} has length {}, batch length is {len}",
                    r.id,
                    r.bases.len()
                )));
            }
            encode_into(&r.bases, &mut data[b * len * 4..(b + 1) * len * 4])?;
        }
        let labels = records.iter().map(|r| T::lit(r.label as f64)).collect();
        Ok(Batch {
            inputs: Tensor::new(vec![records.len(), len, 4], data)?,
            labels: Tensor::new(vec![records.len()], labels)?,
        })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn seq_length(&self) -> usize {
        self.inputs.dim(1)
    }

    /// `[L, 4]` one-hot slice of sample `i`.
    pub fn sample(&self, i: usize) -> &[T] {
        let w = self.seq_length() * 4;
        &self.inputs.data()[i * w..(i + 1) * w]
    }

    fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let w = self.seq_length() * 4;
        Ok(Batch {
            inputs: Tensor::new(
                vec![len, self.seq_length(), 4],
                self.inputs.data()[start * w..(start + len) * w].to_vec(),
            )?,
            labels: Tensor::new(vec![len], self.labels.data()[start..start + len].to_vec())?,
        })
    }
}

/// Groups a stream into full batches of `global_batch`; a trailing partial
/// batch is dropped and reported through [`Batches::dropped`].
pub struct Batches<I> {
    stream: I,
    global_batch: usize,
    dropped: usize,
}

impl<I> Batches<I> {
    pub fn dropped(&self) -> usize {
        self.dropped
    }
}

impl<I: Iterator<Item = T>, T> Batches<I> {
    /// Next group of `global_batch` items, without encoding.
    pub fn next_group(&mut self) -> Option<Vec<T>> {
        let group: Vec<T> = self.stream.by_ref().take(self.global_batch).collect();
        if group.len() == self.global_batch {
            Some(group)
        } else {
            self.dropped += group.len();
            None
        }
    }
}

impl<'a, I: Iterator<Item = &'a SequenceRecord>> Batches<I> {
    pub fn next_batch<T: Scalar>(&mut self) -> Option<Result<Batch<T>>> {
        self.next_group().map(Batch::from_records)
    }
}

pub fn make_batches<I: IntoIterator>(stream: I, global_batch: usize) -> Result<Batches<I::IntoIter>> {
    if global_batch == 0 {
        return Err(Error::Config("global batch must be >= 1".into()));
    }
    Ok(Batches {
        stream: stream.into_iter(),
        global_batch,
        dropped: 0,
    })
}

/// Splits a global batch into `n_replicas` contiguous microbatches.
pub fn shard<T: Scalar>(batch: &Batch<T>, n_replicas: usize) -> Result<Vec<Batch<T>>> {
    let per = per_replica(batch.size(), n_replicas)?;
    (0..n_replicas).map(|r| batch.slice(r * per, per)).collect()
}

/// A whole record set encoded once up front, so batches can be cut by
/// index without re-encoding.
#[derive(Debug, Clone)]
pub struct EncodedSet<T> {
    data: Vec<T>,
    labels: Vec<T>,
    seq_length: usize,
}

impl<T: Scalar> EncodedSet<T> {
    pub fn new(records: &[SequenceRecord], seq_length: usize) -> Result<Self> {
        let mut data = vec![T::zero(); records.len() * seq_length * 4];
        let mut labels = Vec::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.bases.len() != seq_length {
                return Err(Error::Dimension(format!(
                    "record {} has length {}, expected L = {seq_length}",
                    r.id,
                    r.bases.len()
                )));
            }
            if r.label > 1 {
                return Err(Error::Validation(format!("record {} has label {}", r.id, r.label)));
            }
            encode_into(&r.bases, &mut data[i * seq_length * 4..(i + 1) * seq_length * 4])?;
            labels.push(T::lit(r.label as f64));
        }
        Ok(EncodedSet {
            data,
            labels,
            seq_length,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    pub fn batch(&self, indices: &[usize]) -> Result<Batch<T>> {
        if indices.is_empty() {
            return Err(Error::Dimension("a batch needs at least one record".into()));
        }
        let w = self.seq_length * 4;
        let mut data = Vec::with_capacity(indices.len() * w);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(&self.data[i * w..(i + 1) * w]);
            labels.push(self.labels[i]);
        }
        Ok(Batch {
            inputs: Tensor::new(vec![indices.len(), self.seq_length, 4], data)?,
            labels: Tensor::new(vec![indices.len()], labels)?,
        })
    }
}
