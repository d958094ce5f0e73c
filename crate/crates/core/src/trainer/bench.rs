//! Fixed-epoch scaling benchmark over worker counts and strategies.

use std::path::Path;

use serde::Serialize;

use super::{csv_err, metric_cell, train_any, Metric, TrainConfig};
use crate::collective::StrategyKind;
use crate::error::{Error, Result};
use crate::genome_sim::SequenceRecord;
use crate::model::ModelConfig;
use crate::pipeline::per_replica;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub workers: usize,
    pub strategy: StrategyKind,
    pub wall_seconds: f64,
    /// time of the 1-worker run of the same strategy over this run's time.
    pub speedup: Option<f64>,
    pub sequences_per_second: f64,
    pub final_accuracy: Option<f64>,
    pub final_auroc: Metric,
    pub messages: u64,
    pub bytes: u64,
    pub error: Option<String>,
}

impl BenchRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Trains once per (strategy, worker count) with early stopping disabled and
/// the global batch held at `global_batch`. A failing row records its error
/// and the sweep continues. Speedups use the 1-worker row of each strategy,
/// or its first successful row when no 1-worker run was requested.
pub fn benchmark(
    base: &TrainConfig,
    model: &ModelConfig,
    global_batch: usize,
    worker_counts: &[usize],
    strategies: &[StrategyKind],
    train_set: &[SequenceRecord],
    validation: &[SequenceRecord],
) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for &strategy in strategies {
        let first = rows.len();
        for &workers in worker_counts {
            let run = per_replica(global_batch, workers).and_then(|bpr| {
                let cfg = TrainConfig {
                    n_replicas: workers,
                    strategy,
                    batch_per_replica: bpr,
                    early_stop: None,
                    ..*base
                };
                train_any(&cfg, model, train_set, validation)
            });
            rows.push(match run {
                Ok((_, report)) => {
                    let last = report.final_epoch();
                    let seen = report.steps * global_batch;
                    BenchRow {
                        workers,
                        strategy,
                        wall_seconds: report.total_wall_seconds,
                        speedup: None,
                        sequences_per_second: seen as f64 / report.total_wall_seconds.max(f64::MIN_POSITIVE),
                        final_accuracy: last.map(|e| e.val_accuracy),
                        final_auroc: last.map_or(Metric::UNDEFINED, |e| e.val_auroc),
                        messages: report.messages,
                        bytes: report.bytes,
                        error: None,
                    }
                }
                Err(e) => BenchRow {
                    workers,
                    strategy,
                    wall_seconds: 0.0,
                    speedup: None,
                    sequences_per_second: 0.0,
                    final_accuracy: None,
                    final_auroc: Metric::UNDEFINED,
                    messages: 0,
                    bytes: 0,
                    error: Some(e.to_string()),
                },
            });
        }
        let group = &mut rows[first..];
        let baseline = group
            .iter()
            .find(|r| r.is_ok() && r.workers == 1)
            .or_else(|| group.iter().find(|r| r.is_ok()))
            .map(|r| r.wall_seconds);
        if let Some(t1) = baseline {
            for r in group.iter_mut().filter(|r| r.is_ok()) {
                r.speedup = Some(t1 / r.wall_seconds.max(f64::MIN_POSITIVE));
            }
        }
    }
    rows
}

pub fn write_benchmark_csv(rows: &[BenchRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record([
        "workers", "strategy", "wall_s", "speedup", "seq_per_s", "final_acc", "final_auroc", "messages", "bytes",
        "error",
    ])
    .map_err(|e| csv_err(path, e))?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for r in rows {
        w.write_record([
            r.workers.to_string(),
            r.strategy.as_str().to_string(),
            r.wall_seconds.to_string(),
            opt(r.speedup),
            r.sequences_per_second.to_string(),
            opt(r.final_accuracy),
            metric_cell(r.final_auroc),
            r.messages.to_string(),
            r.bytes.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
