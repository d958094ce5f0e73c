//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use dcnn::genome_sim::{generate_dataset, Pwm, SequenceRecord, SimConfig};
use dcnn::model::{bce_loss, predict, Activation, ModelConfig, ModelParams};
use dcnn::pipeline::Batch;
use dcnn::rng::SimRng;

pub fn dataset(n_pos: usize, n_neg: usize, seq_length: usize, seed: u64) -> Vec<SequenceRecord> {
    let cfg = SimConfig {
        seq_length,
        n_positive: n_pos,
        n_negative: n_neg,
        seed,
        ..SimConfig::default()
    };
    generate_dataset(&cfg, &Pwm::default_tal1()).unwrap()
}

pub fn model(seq_length: usize, n_filters: usize, filter_width: usize, pool: usize) -> ModelConfig {
    ModelConfig {
        n_filters,
        filter_width,
        pool_window: pool,
        pool_stride: pool,
        conv_activation: Activation::Relu,
        seq_length,
    }
}

pub fn random_bases(len: usize, rng: &mut SimRng) -> String {
    (0..len).map(|_| b"ACGT"[rng.below(4)] as char).collect()
}

/// Sum of all inputs followed by a broadcast, i.e. what every rank must
/// hold after an all-reduce.
pub fn gather_sum_i64(inputs: &[Vec<i64>]) -> Vec<i64> {
    let mut out = vec![0i64; inputs[0].len()];
    for v in inputs {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    out
}

pub fn gather_sum_f64(inputs: &[Vec<f32>]) -> (Vec<f64>, Vec<f64>) {
    let d = inputs[0].len();
    let mut sum = vec![0.0f64; d];
    let mut scale = vec![0.0f64; d];
    for v in inputs {
        for i in 0..d {
            sum[i] += v[i] as f64;
            scale[i] += (v[i] as f64).abs();
        }
    }
    (sum, scale)
}

/// Mann-Whitney statistic by counting every positive/negative pair.
pub fn auroc_pairs(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

/// Average precision from the PR curve evaluated at every distinct
/// threshold: Σ (recall(t) − recall(t_prev)) · precision(t).
pub fn auprc_thresholds(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let predicted: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let tp = predicted.iter().filter(|&&i| labels[i] == 1).count();
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / predicted.len() as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(ap)
}

pub fn mean_loss(params: &ModelParams<f64>, config: &ModelConfig, batch: &Batch<f64>) -> f64 {
    let p = predict(params, config, batch).unwrap();
    bce_loss(&p, batch.labels.data()).unwrap()
}

/// Central finite-difference gradient of the mean batch loss with respect
/// to every flat parameter.
pub fn numeric_gradient(params: &ModelParams<f64>, config: &ModelConfig, batch: &Batch<f64>, h: f64) -> Vec<f64> {
    let flat = params.flatten();
    let mut work = params.clone();
    let mut out = Vec::with_capacity(flat.len());
    for i in 0..flat.len() {
        let mut v = flat.clone();
        v[i] = flat[i] + h;
        work.assign_flat(&v).unwrap();
        let up = mean_loss(&work, config, batch);
        v[i] = flat[i] - h;
        work.assign_flat(&v).unwrap();
        let down = mean_loss(&work, config, batch);
        out.push((up - down) / (2.0 * h));
    }
    out
}

/// |a − n| / max(|a|, |n|), with absolute error used for components whose
/// magnitude is below `floor`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
