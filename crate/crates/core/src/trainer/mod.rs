//! Synchronous data-parallel training.
//!
//! `train` spawns one thread per replica (plus a server thread for the
//! parameter-server strategy). Every replica derives the same shuffled
//! epoch plan from the seed, takes its contiguous slice of each global
//! batch, and aggregates through the collectives. The calling thread only
//! evaluates, decides on early stopping and assembles the report.

mod bench;
pub mod metrics;

pub use bench::{benchmark, write_benchmark_csv, BenchRow};
pub use metrics::{accuracy, auprc, auroc, Metric};

use std::fs;
use std::path::Path;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::collective::{
    gossip_exchange, gossip_finalize_distributed, ps_serve_round, ps_worker_exchange,
    ring_all_reduce, Element, Endpoint, StrategyKind, Transport,
};
use crate::error::{Error, Result};
use crate::genome_sim::SequenceRecord;
use crate::model::{
    bce_loss, init_params, loss_and_grads, predict, AdamHyper, AdamState, ModelConfig,
    ModelParams, ParamSet,
};
use crate::pipeline::{shuffled_stream, EncodedSet};
use crate::rng::mix64;
use crate::tensor::{Precision, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EarlyStop {
    pub patience: usize,
    pub min_delta: f64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        EarlyStop {
            patience: 5,
            min_delta: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub n_replicas: usize,
    pub strategy: StrategyKind,
    pub epochs_max: usize,
    pub batch_per_replica: usize,
    pub shuffle_buffer_size: usize,
    pub seed: u64,
    pub precision: Precision,
    /// `None` disables early stopping.
    pub early_stop: Option<EarlyStop>,
    /// Optimizer steps between gossip rounds.
    pub gossip_period: usize,
    /// Average models once per epoch instead of aggregating every step.
    pub aggregate_per_epoch: bool,
    pub adam: AdamHyper,
    /// Verify after every step that lockstep strategies hold bit-identical
    /// replicas.
    pub check_lockstep: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_replicas: 1,
            strategy: StrategyKind::RingAllReduce,
            epochs_max: 50,
            batch_per_replica: 64,
            shuffle_buffer_size: 100,
            seed: 0,
            precision: Precision::F32,
            early_stop: Some(EarlyStop::default()),
            gossip_period: 1,
            aggregate_per_epoch: false,
            adam: AdamHyper::default(),
            check_lockstep: false,
        }
    }
}

impl TrainConfig {
    pub fn global_batch(&self) -> usize {
        self.batch_per_replica * self.n_replicas
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_replicas", self.n_replicas),
            ("epochs_max", self.epochs_max),
            ("batch_per_replica", self.batch_per_replica),
            ("shuffle_buffer_size", self.shuffle_buffer_size),
            ("gossip_period", self.gossip_period),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Lockstep strategies keep every replica bit-identical after each step.
    pub fn is_lockstep(&self) -> bool {
        !self.aggregate_per_epoch && self.strategy != StrategyKind::Gossip
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub loss: f64,
    pub accuracy: f64,
    pub auroc: Metric,
    pub auprc: Metric,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub val_auroc: Metric,
    pub val_auprc: Metric,
    pub wall_seconds: f64,
    pub sequences_per_second: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxEpochs,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub model: ModelConfig,
    pub epochs: Vec<EpochMetrics>,
    pub total_wall_seconds: f64,
    pub steps: usize,
    pub messages: u64,
    pub bytes: u64,
    pub stop_reason: StopReason,
    pub n_train: usize,
    pub n_validation: usize,
    /// Training records left out of each epoch by the drop-remainder rule.
    pub dropped_per_epoch: usize,
    pub test: Option<EvalMetrics>,
}

impl TrainReport {
    pub fn final_epoch(&self) -> Option<&EpochMetrics> {
        self.epochs.last()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serialises");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn write_curves_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["epoch", "train_loss", "val_loss", "val_acc", "val_auroc", "val_auprc", "wall_s"])
            .map_err(|e| csv_err(path, e))?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                e.train_loss.to_string(),
                e.val_loss.to_string(),
                e.val_accuracy.to_string(),
                metric_cell(e.val_auroc),
                metric_cell(e.val_auprc),
                e.wall_seconds.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn metric_cell(m: Metric) -> String {
    m.0.map_or_else(|| "undefined".to_string(), |v| v.to_string())
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

/// Indices of each global batch for one epoch: a buffered shuffle of
/// `0..n` cut into full batches. Returns the plan and the dropped count.
pub fn epoch_plan(
    n: usize,
    global_batch: usize,
    shuffle_buffer_size: usize,
    seed: u64,
    epoch: usize,
) -> (Vec<Vec<usize>>, usize) {
    let order: Vec<usize> =
        shuffled_stream(0..n, shuffle_buffer_size, mix64(seed ^ mix64(epoch as u64 + 1))).collect();
    let full = n / global_batch;
    let plan = order
        .chunks_exact(global_batch)
        .map(<[usize]>::to_vec)
        .collect();
    (plan, n - full * global_batch)
}

/// Forward-only metrics over an encoded set, spread over `threads` threads.
/// The result does not depend on `threads`.
pub fn evaluate_encoded<T: Scalar>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    data: &EncodedSet<T>,
    threads: usize,
) -> Result<EvalMetrics> {
    if data.is_empty() {
        return Err(Error::Validation("cannot evaluate an empty dataset".into()));
    }
    let n = data.len();
    let threads = threads.clamp(1, n);
    let per = n.div_ceil(threads);
    let chunks: Vec<Result<Vec<T>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let lo = (t * per).min(n);
                let hi = ((t + 1) * per).min(n);
                s.spawn(move || -> Result<Vec<T>> {
                    let mut out = Vec::with_capacity(hi - lo);
                    let idx: Vec<usize> = (lo..hi).collect();
                    for part in idx.chunks(256) {
                        out.extend(predict(params, config, &data.batch(part)?)?);
                    }
                    Ok(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("eval thread panicked")).collect()
    });
    let mut probs = Vec::with_capacity(n);
    for c in chunks {
        probs.extend(c?);
    }
    let loss = bce_loss(&probs, data.labels())?.to_f64_lossy();
    let scores: Vec<f64> = probs.iter().map(|p| p.to_f64_lossy()).collect();
    let labels: Vec<u8> = data.labels().iter().map(|&y| u8::from(y == T::one())).collect();
    Ok(EvalMetrics {
        loss,
        accuracy: accuracy(&scores, &labels),
        auroc: auroc(&scores, &labels),
        auprc: auprc(&scores, &labels),
        n,
    })
}

pub fn evaluate<T: Scalar>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    records: &[SequenceRecord],
) -> Result<EvalMetrics> {
    let data = EncodedSet::new(records, config.seq_length)?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    evaluate_encoded(params, config, &data, threads)
}

/// Final parameters of a run in the precision it was trained in.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyParams {
    F32(ModelParams<f32>),
    F64(ModelParams<f64>),
}

pub struct Trained<T> {
    pub params: ModelParams<T>,
    pub report: TrainReport,
}

/// Runs [`train`] in the precision selected by `config.precision`.
pub fn train_any(
    config: &TrainConfig,
    model: &ModelConfig,
    train_set: &[SequenceRecord],
    validation: &[SequenceRecord],
) -> Result<(AnyParams, TrainReport)> {
    match config.precision {
        Precision::F32 => train::<f32>(config, model, train_set, validation)
            .map(|t| (AnyParams::F32(t.params), t.report)),
        Precision::F64 => train::<f64>(config, model, train_set, validation)
            .map(|t| (AnyParams::F64(t.params), t.report)),
    }
}

enum Control {
    Continue,
    Stop,
}

struct EpochReport<T> {
    rank: usize,
    params: Vec<T>,
    loss_sum: f64,
    samples: usize,
    step_hashes: Vec<u64>,
}

enum WorkerMsg<T> {
    Epoch(EpochReport<T>),
    Final { rank: usize, params: Vec<T> },
    Failed { rank: usize, error: Error },
}

fn hash_params<T: Scalar>(p: &[T]) -> u64 {
    p.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| {
        (h ^ v.to_f64_lossy().to_bits()).wrapping_mul(0x0100_0000_01b3)
    })
}

struct Shared<'a, T> {
    config: &'a TrainConfig,
    model: &'a ModelConfig,
    data: &'a EncodedSet<T>,
    init: &'a [T],
    template: &'a ModelParams<T>,
}

fn worker_loop<T: Scalar + Element>(
    sh: &Shared<'_, T>,
    ep: Endpoint<T>,
    control: Receiver<Control>,
    out: &Sender<WorkerMsg<T>>,
) -> Result<()> {
    let cfg = sh.config;
    let rank = ep.rank();
    let n = cfg.n_replicas;
    let bpr = cfg.batch_per_replica;
    let mut flat = sh.init.to_vec();
    let mut adam = AdamState::new(flat.len(), cfg.adam);
    let mut params = sh.template.clone();
    let mut local_steps = 0usize;
    let mut gossip_round_idx = 0usize;
    for epoch in 0.. {
        let (plan, _) = epoch_plan(sh.data.len(), cfg.global_batch(), cfg.shuffle_buffer_size, cfg.seed, epoch);
        let mut loss_sum = 0.0;
        let mut samples = 0;
        let mut step_hashes = Vec::new();
        for group in &plan {
            let batch = sh.data.batch(&group[rank * bpr..(rank + 1) * bpr])?;
            params.assign_flat(&flat)?;
            let (loss, grads) = loss_and_grads(&params, sh.model, &batch)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    last_good_epoch: epoch.checked_sub(1),
                    partial: None,
                });
            }
            loss_sum += loss.to_f64_lossy() * bpr as f64;
            samples += bpr;
            let mut g = grads.flatten();
            if cfg.aggregate_per_epoch || n == 1 {
                adam.step(&mut flat, &g)?;
            } else {
                match cfg.strategy {
                    StrategyKind::RingAllReduce => {
                        ring_all_reduce(&ep, &mut g)?;
                        for x in g.iter_mut() {
                            *x = x.div_count(n);
                        }
                        adam.step(&mut flat, &g)?;
                    }
                    StrategyKind::ParameterServer => ps_worker_exchange(&ep, g, &mut flat)?,
                    StrategyKind::Gossip => {
                        adam.step(&mut flat, &g)?;
                        local_steps += 1;
                        if n > 1 && local_steps % cfg.gossip_period == 0 {
                            gossip_exchange(&ep, &mut flat, gossip_round_idx)?;
                            gossip_round_idx += 1;
                        }
                    }
                }
            }
            if cfg.check_lockstep {
                step_hashes.push(hash_params(&flat));
            }
        }
        if cfg.aggregate_per_epoch && n > 1 {
            match cfg.strategy {
                StrategyKind::RingAllReduce => {
                    ring_all_reduce(&ep, &mut flat)?;
                    for x in flat.iter_mut() {
                        *x = x.div_count(n);
                    }
                }
                StrategyKind::ParameterServer => {
                    let mine = flat.clone();
                    ps_worker_exchange(&ep, mine, &mut flat)?;
                }
                StrategyKind::Gossip => {
                    gossip_exchange(&ep, &mut flat, gossip_round_idx)?;
                    gossip_round_idx += 1;
                }
            }
        }
        let _ = out.send(WorkerMsg::Epoch(EpochReport {
            rank,
            params: flat.clone(),
            loss_sum,
            samples,
            step_hashes,
        }));
        match control.recv() {
            Ok(Control::Continue) => {}
            Ok(Control::Stop) | Err(_) => break,
        }
    }
    if cfg.strategy == StrategyKind::Gossip {
        gossip_finalize_distributed(&ep, &mut flat)?;
    }
    let _ = out.send(WorkerMsg::Final { rank, params: flat });
    Ok(())
}

fn server_loop<T: Scalar + Element>(
    sh: &Shared<'_, T>,
    ep: Endpoint<T>,
    control: Receiver<Control>,
) -> Result<()> {
    let cfg = sh.config;
    let mut params = sh.init.to_vec();
    let mut adam = AdamState::new(params.len(), cfg.adam);
    let steps = sh.data.len() / cfg.global_batch();
    loop {
        if cfg.aggregate_per_epoch {
            ps_serve_round(&ep, &mut params, |p, mean| {
                p.copy_from_slice(mean);
                Ok(())
            })?;
        } else {
            for _ in 0..steps {
                ps_serve_round(&ep, &mut params, |p, g| adam.step(p, g))?;
            }
        }
        match control.recv() {
            Ok(Control::Continue) => {}
            Ok(Control::Stop) | Err(_) => return Ok(()),
        }
    }
}

fn mean_params<T: Scalar + Element>(vectors: &[Vec<T>]) -> Vec<T> {
    let mut acc = vec![<T as Element>::zero(); vectors[0].len()];
    for v in vectors {
        crate::collective::accumulate(&mut acc, v);
    }
    acc.into_iter().map(|x| x.div_count(vectors.len())).collect()
}

/// Picks the root cause among worker failures: divergence first, then any
/// error that is not a downstream hang-up.
fn root_cause(errors: Vec<(usize, Error)>) -> Error {
    let mut fallback = None;
    let mut other = None;
    for (_, e) in errors {
        match e {
            Error::Diverged { .. } => return e,
            Error::Protocol(_) | Error::Timeout(_) => {
                fallback.get_or_insert(e);
            }
            _ => {
                other.get_or_insert(e);
            }
        }
    }
    other
        .or(fallback)
        .unwrap_or_else(|| Error::Internal("worker failed without an error".into()))
}

pub fn train<T: Scalar + Element>(
    config: &TrainConfig,
    model: &ModelConfig,
    train_set: &[SequenceRecord],
    validation: &[SequenceRecord],
) -> Result<Trained<T>> {
    config.validate()?;
    model.validate()?;
    if T::PRECISION != config.precision {
        return Err(Error::Config(format!(
            "config asks for {:?} but train was instantiated for {:?}",
            config.precision,
            T::PRECISION
        )));
    }
    let global = config.global_batch();
    if train_set.len() < global {
        return Err(Error::Config(format!(
            "training split has {} records, fewer than one global batch of {global}",
            train_set.len()
        )));
    }
    if validation.is_empty() {
        return Err(Error::Config("validation split is empty".into()));
    }
    let data = EncodedSet::<T>::new(train_set, model.seq_length)?;
    let val = EncodedSet::<T>::new(validation, model.seq_length)?;
    let init_set = init_params::<T>(model, config.seed)?;
    let init = init_set.flatten();
    let n = config.n_replicas;
    let is_ps = config.strategy == StrategyKind::ParameterServer && n > 1;
    let world = if is_ps { n + 1 } else { n };
    let (_, dropped) = epoch_plan(data.len(), global, config.shuffle_buffer_size, config.seed, 0);
    let steps_per_epoch = data.len() / global;
    let eval_threads = n.max(1);

    let shared = Shared {
        config,
        model,
        data: &data,
        init: &init,
        template: &init_set,
    };
    let mut report = TrainReport {
        config: *config,
        model: *model,
        epochs: Vec::new(),
        total_wall_seconds: 0.0,
        steps: 0,
        messages: 0,
        bytes: 0,
        stop_reason: StopReason::MaxEpochs,
        n_train: data.len(),
        n_validation: val.len(),
        dropped_per_epoch: dropped,
        test: None,
    };

    let start = Instant::now();
    let (endpoints, stats) = Transport::new::<T>(world);
    let (msg_tx, msg_rx) = channel::<WorkerMsg<T>>();
    let mut controls: Vec<Sender<Control>> = Vec::with_capacity(world);

    let outcome: Result<Vec<T>> = std::thread::scope(|s| {
        let shared = &shared;
        for ep in endpoints {
            let (ctl_tx, ctl_rx) = channel();
            controls.push(ctl_tx);
            let out = msg_tx.clone();
            let rank = ep.rank();
            if rank < n {
                s.spawn(move || {
                    if let Err(error) = worker_loop(shared, ep, ctl_rx, &out) {
                        let _ = out.send(WorkerMsg::Failed { rank, error });
                    }
                });
            } else {
                s.spawn(move || {
                    if let Err(error) = server_loop(shared, ep, ctl_rx) {
                        let _ = out.send(WorkerMsg::Failed { rank, error });
                    }
                });
            }
        }
        drop(msg_tx);

        let broadcast = |c: fn() -> Control| {
            for tx in &controls {
                let _ = tx.send(c());
            }
        };

        let mut best = f64::INFINITY;
        let mut since_best = 0usize;
        let mut epoch_start = start;
        for epoch in 0..config.epochs_max {
            let mut reports: Vec<Option<EpochReport<T>>> = (0..n).map(|_| None).collect();
            let mut failures = Vec::new();
            let mut pending = n;
            while pending > 0 {
                match msg_rx.recv() {
                    Ok(WorkerMsg::Epoch(r)) => {
                        let rank = r.rank;
                        reports[rank] = Some(r);
                        pending -= 1;
                    }
                    Ok(WorkerMsg::Failed { rank, error }) => {
                        failures.push((rank, error));
                        if rank < n {
                            pending -= 1;
                        }
                    }
                    Ok(WorkerMsg::Final { .. }) => {}
                    Err(_) => break,
                }
            }
            if !failures.is_empty() || reports.iter().any(Option::is_none) {
                broadcast(|| Control::Stop);
                let cause = root_cause(failures);
                report.total_wall_seconds = start.elapsed().as_secs_f64();
                report.messages = stats.messages();
                report.bytes = stats.bytes();
                return Err(match cause {
                    Error::Diverged { .. } => {
                        report.stop_reason = StopReason::Diverged;
                        Error::Diverged {
                            last_good_epoch: epoch.checked_sub(1),
                            partial: Some(Box::new(report.clone())),
                        }
                    }
                    other => other,
                });
            }
            let reports: Vec<EpochReport<T>> = reports.into_iter().map(Option::unwrap).collect();
            if config.check_lockstep && config.is_lockstep() {
                for r in &reports[1..] {
                    if r.step_hashes != reports[0].step_hashes || r.params != reports[0].params {
                        broadcast(|| Control::Stop);
                        return Err(Error::Internal(format!(
                            "replica {} diverged from replica 0 during epoch {epoch}",
                            r.rank
                        )));
                    }
                }
            }
            let eval_flat = if config.strategy == StrategyKind::Gossip && n > 1 {
                mean_params(&reports.iter().map(|r| r.params.clone()).collect::<Vec<_>>())
            } else {
                reports[0].params.clone()
            };
            let eval_params = ParamSet::unflatten_like(&init_set, &eval_flat)?;
            let samples: usize = reports.iter().map(|r| r.samples).sum();
            let train_loss = reports.iter().map(|r| r.loss_sum).sum::<f64>() / samples.max(1) as f64;
            let m = evaluate_encoded(&eval_params, model, &val, eval_threads)?;
            let now = Instant::now();
            let wall = now.duration_since(epoch_start).as_secs_f64().max(f64::MIN_POSITIVE);
            epoch_start = now;
            report.steps += steps_per_epoch;
            report.epochs.push(EpochMetrics {
                epoch,
                train_loss,
                val_loss: m.loss,
                val_accuracy: m.accuracy,
                val_auroc: m.auroc,
                val_auprc: m.auprc,
                wall_seconds: wall,
                sequences_per_second: samples as f64 / wall,
            });
            if !m.loss.is_finite() || !train_loss.is_finite() {
                broadcast(|| Control::Stop);
                report.stop_reason = StopReason::Diverged;
                report.total_wall_seconds = start.elapsed().as_secs_f64();
                report.messages = stats.messages();
                report.bytes = stats.bytes();
                return Err(Error::Diverged {
                    last_good_epoch: epoch.checked_sub(1),
                    partial: Some(Box::new(report.clone())),
                });
            }
            let mut stop = epoch + 1 == config.epochs_max;
            if let Some(es) = config.early_stop {
                if m.loss < best - es.min_delta {
                    best = m.loss;
                    since_best = 0;
                } else {
                    since_best += 1;
                    if since_best >= es.patience {
                        report.stop_reason = StopReason::Converged;
                        stop = true;
                    }
                }
            }
            if stop {
                break;
            }
            broadcast(|| Control::Continue);
        }
        broadcast(|| Control::Stop);

        let mut finals: Vec<Option<Vec<T>>> = (0..n).map(|_| None).collect();
        let mut failures = Vec::new();
        let mut pending = n;
        while pending > 0 {
            match msg_rx.recv() {
                Ok(WorkerMsg::Final { rank, params }) => {
                    finals[rank] = Some(params);
                    pending -= 1;
                }
                Ok(WorkerMsg::Failed { rank, error }) => {
                    failures.push((rank, error));
                    if rank < n {
                        pending -= 1;
                    }
                }
                Ok(WorkerMsg::Epoch(_)) => {}
                Err(_) => break,
            }
        }
        if !failures.is_empty() {
            return Err(root_cause(failures));
        }
        let finals: Vec<Vec<T>> = finals
            .into_iter()
            .map(|f| f.ok_or_else(|| Error::Internal("a worker exited without final parameters".into())))
            .collect::<Result<_>>()?;
        if finals.iter().any(|f| f != &finals[0]) {
            return Err(Error::Internal("replicas disagree after the final aggregation".into()));
        }
        Ok(finals.into_iter().next().expect("n >= 1"))
    });

    let final_flat = outcome?;
    report.total_wall_seconds = start.elapsed().as_secs_f64();
    report.messages = stats.messages();
    report.bytes = stats.bytes();
    Ok(Trained {
        params: ParamSet::unflatten_like(&init_set, &final_flat)?,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome_sim::{generate_dataset, Pwm, SimConfig};
    use crate::model::Activation;

    fn tiny_model() -> ModelConfig {
        ModelConfig {
            n_filters: 3,
            filter_width: 6,
            pool_window: 10,
            pool_stride: 10,
            conv_activation: Activation::Relu,
            seq_length: 80,
        }
    }

    fn data(n: usize, seed: u64) -> Vec<SequenceRecord> {
        let cfg = SimConfig {
            seq_length: 80,
            n_positive: n / 2,
            n_negative: n - n / 2,
            cluster_min: 1,
            cluster_max: 3,
            seed,
            ..SimConfig::default()
        };
        generate_dataset(&cfg, &Pwm::default_tal1()).unwrap()
    }

    fn cfg(n: usize, strategy: StrategyKind) -> TrainConfig {
        TrainConfig {
            n_replicas: n,
            strategy,
            epochs_max: 2,
            batch_per_replica: 16 / n,
            early_stop: None,
            check_lockstep: true,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn epoch_plan_drops_remainder() {
        let (plan, dropped) = epoch_plan(130, 64, 100, 1, 0);
        assert_eq!(plan.len(), 2);
        assert_eq!(dropped, 2);
        let mut all: Vec<usize> = plan.concat();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 128);
        assert_ne!(epoch_plan(130, 64, 100, 1, 1).0, plan);
    }

    #[test]
    fn single_worker_strategies_agree() {
        let recs = data(64, 1);
        let val = data(20, 2);
        let mut finals = Vec::new();
        for s in [StrategyKind::RingAllReduce, StrategyKind::ParameterServer, StrategyKind::Gossip] {
            let t = train::<f32>(&cfg(1, s), &tiny_model(), &recs, &val).unwrap();
            finals.push(t.params.flatten());
            assert_eq!(t.report.messages, 0);
        }
        assert_eq!(finals[0], finals[1]);
        assert_eq!(finals[0], finals[2]);
    }

    #[test]
    fn lockstep_and_message_counts() {
        let recs = data(64, 1);
        let val = data(20, 2);
        let model = tiny_model();
        let d = model.param_count() as u64;
        let ar = train::<f32>(&cfg(4, StrategyKind::RingAllReduce), &model, &recs, &val).unwrap();
        assert_eq!(ar.report.steps, 8);
        assert_eq!(ar.report.messages, 8 * 2 * 4 * 3);
        let ps = train::<f32>(&cfg(4, StrategyKind::ParameterServer), &model, &recs, &val).unwrap();
        assert_eq!(ps.report.messages, 8 * 2 * 4);
        assert_eq!(ps.report.bytes, 8 * 2 * 4 * d * 4);
    }

    #[test]
    fn gossip_finalizes_to_a_common_model() {
        let recs = data(64, 3);
        let val = data(20, 4);
        let mut c = cfg(4, StrategyKind::Gossip);
        c.gossip_period = 2;
        let t = train::<f64>(&TrainConfig { precision: Precision::F64, ..c }, &tiny_model(), &recs, &val).unwrap();
        assert!(t.params.is_finite());
        // 4 exchanges per gossip round (every 2nd of 8 steps), plus finalize 2(N-1)
        assert_eq!(t.report.messages, 4 * 4 + 6);
    }

    #[test]
    fn per_epoch_aggregation_runs() {
        let recs = data(64, 5);
        let val = data(20, 6);
        for s in [StrategyKind::RingAllReduce, StrategyKind::ParameterServer, StrategyKind::Gossip] {
            let c = TrainConfig {
                aggregate_per_epoch: true,
                ..cfg(2, s)
            };
            let t = train::<f32>(&c, &tiny_model(), &recs, &val).unwrap();
            assert_eq!(t.report.epochs.len(), 2);
        }
    }

    #[test]
    fn deterministic_reports() {
        let recs = data(64, 7);
        let val = data(20, 8);
        let a = train::<f32>(&cfg(2, StrategyKind::RingAllReduce), &tiny_model(), &recs, &val).unwrap();
        let b = train::<f32>(&cfg(2, StrategyKind::RingAllReduce), &tiny_model(), &recs, &val).unwrap();
        assert_eq!(a.params, b.params);
        for (x, y) in a.report.epochs.iter().zip(&b.report.epochs) {
            assert_eq!(x.train_loss, y.train_loss);
            assert_eq!(x.val_loss, y.val_loss);
            assert_eq!(x.val_auroc, y.val_auroc);
        }
    }

    #[test]
    fn early_stopping_bounds_extra_epochs() {
        let recs = data(64, 9);
        let val = data(20, 10);
        let c = TrainConfig {
            epochs_max: 40,
            early_stop: Some(EarlyStop {
                patience: 2,
                min_delta: 10.0,
            }),
            ..cfg(1, StrategyKind::RingAllReduce)
        };
        let t = train::<f32>(&c, &tiny_model(), &recs, &val).unwrap();
        // min_delta larger than any possible gain: stops `patience` epochs after the first
        assert_eq!(t.report.epochs.len(), 3);
        assert_eq!(t.report.stop_reason, StopReason::Converged);
    }

    #[test]
    fn diverging_run_reports_partial() {
        let recs = data(64, 11);
        let val = data(20, 12);
        let c = TrainConfig {
            adam: AdamHyper {
                learning_rate: f64::INFINITY,
                ..AdamHyper::default()
            },
            ..cfg(2, StrategyKind::RingAllReduce)
        };
        match train::<f32>(&c, &tiny_model(), &recs, &val) {
            Err(Error::Diverged { partial, .. }) => {
                if let Some(p) = partial {
                    assert_eq!(p.stop_reason, StopReason::Diverged);
                }
            }
            Err(e) => panic!("expected divergence, got {e}"),
            Ok(_) => panic!("expected divergence"),
        }
    }

    #[test]
    fn precision_mismatch_rejected() {
        let recs = data(64, 1);
        let c = cfg(1, StrategyKind::RingAllReduce);
        assert!(matches!(
            train::<f64>(&c, &tiny_model(), &recs, &recs),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn evaluation_independent_of_threads() {
        let recs = data(40, 13);
        let model = tiny_model();
        let p = init_params::<f32>(&model, 1).unwrap();
        let set = EncodedSet::new(&recs, 80).unwrap();
        let a = evaluate_encoded(&p, &model, &set, 1).unwrap();
        let b = evaluate_encoded(&p, &model, &set, 3).unwrap();
        assert_eq!(a, b);
    }
}
