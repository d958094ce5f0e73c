//! Classification metrics: accuracy, auROC and auPRC (average precision).

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A metric that may be undefined (e.g. auROC on a single-class set).
/// Serialises as a number or the string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metric(pub Option<f64>);

impl Metric {
    pub const UNDEFINED: Metric = Metric(None);

    pub fn value(self) -> Option<f64> {
        self.0
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v:.4}"),
            None => f.write_str("undefined"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Metric(Some(v))),
            Raw::Str(s) if s == "undefined" => Ok(Metric(None)),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad metric {s:?}"))),
        }
    }
}

/// Fraction of samples where `score > 0.5` agrees with the label; a score of
/// exactly 0.5 counts as negative.
pub fn accuracy(scores: &[f64], labels: &[u8]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &y)| u8::from(s > 0.5) == y)
        .count();
    correct as f64 / scores.len() as f64
}

fn sorted_desc(scores: &[f64], labels: &[u8]) -> Vec<(f64, u8)> {
    let mut pairs: Vec<(f64, u8)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    pairs
}

/// Probability that a random positive outranks a random negative, ties
/// counted as one half (Mann-Whitney U / (P·N)).
pub fn auroc(scores: &[f64], labels: &[u8]) -> Metric {
    let pairs = sorted_desc(scores, labels);
    let n_pos = pairs.iter().filter(|p| p.1 == 1).count();
    let n_neg = pairs.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Metric::UNDEFINED;
    }
    // walk tie blocks from the top; each positive beats every negative
    // strictly below it and half of those tied with it
    let mut negs_above = 0usize;
    let mut u = 0.0f64;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        let (mut p, mut n) = (0usize, 0usize);
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            if pairs[j].1 == 1 {
                p += 1;
            } else {
                n += 1;
            }
            j += 1;
        }
        let negs_below = n_neg - negs_above - n;
        u += p as f64 * (negs_below as f64 + 0.5 * n as f64);
        negs_above += n;
        i = j;
    }
    Metric(Some(u / (n_pos as f64 * n_neg as f64)))
}

/// Average precision: Σ over descending-score tie blocks of
/// `(recall increment) × (precision after the block)`.
pub fn auprc(scores: &[f64], labels: &[u8]) -> Metric {
    let pairs = sorted_desc(scores, labels);
    let n_pos = pairs.iter().filter(|p| p.1 == 1).count();
    if n_pos == 0 {
        return Metric::UNDEFINED;
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        let mut block_tp = 0;
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            if pairs[j].1 == 1 {
                block_tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        tp += block_tp;
        if block_tp > 0 {
            let precision = tp as f64 / (tp + fp) as f64;
            ap += block_tp as f64 / n_pos as f64 * precision;
        }
        i = j;
    }
    Metric(Some(ap))
}
