//! Simulated regulatory sequences.
//!
//! Positives carry a homotypic cluster of motif instances sampled from a
//! position weight matrix and planted in the central region of an i.i.d.
//! background; negatives are background only and are resampled until they
//! contain no exact consensus match.

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

pub const BASES: [u8; 4] = *b"ACGT";

const PLACEMENT_ATTEMPTS: usize = 1000;
const NEGATIVE_RETRIES: usize = 100;
const FASTA_WIDTH: usize = 80;

pub fn base_index(b: u8) -> Option<usize> {
    match b {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

/// Position weight matrix, one row of A/C/G/T probabilities per motif
/// position.
#[derive(Debug, Clone, PartialEq)]
pub struct Pwm {
    name: String,
    rows: Vec<[f64; 4]>,
}

impl Pwm {
    pub fn new(name: impl Into<String>, rows: Vec<[f64; 4]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Validation("PWM must have at least one row".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Validation(format!(
                    "PWM row {i} has an entry outside [0, 1]: {row:?}"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::Validation(format!("PWM row {i} sums to {s}, not 1")));
            }
        }
        Ok(Pwm {
            name: name.into(),
            rows,
        })
    }

    /// Built-in 10 bp motif around the E-box core `CAGATG`, with 0.85 on the
    /// consensus base and 0.05 on each other base.
    pub fn default_tal1() -> Self {
        Pwm::from_consensus("TAL1_ebox_default", "AACAGATGGT", 0.85)
            .expect("built-in consensus is valid")
    }

    /// A PWM putting `p_consensus` on each consensus base and spreading the
    /// remainder evenly.
    pub fn from_consensus(name: &str, consensus: &str, p_consensus: f64) -> Result<Self> {
        let other = (1.0 - p_consensus) / 3.0;
        let rows = consensus
            .bytes()
            .enumerate()
            .map(|(i, b)| {
                let k = base_index(b).ok_or(Error::Encode {
                    position: i,
                    found: b as char,
                })?;
                let mut row = [other; 4];
                row[k] = p_consensus;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Pwm::new(name, rows)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn matrix(&self) -> &[[f64; 4]] {
        &self.rows
    }

    /// Most probable base per row (first column wins ties).
    pub fn consensus(&self) -> String {
        self.rows
            .iter()
            .map(|row| {
                let mut best = 0;
                for k in 1..4 {
                    if row[k] > row[best] {
                        best = k;
                    }
                }
                BASES[best] as char
            })
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty PWM file".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "#PWM" {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected `#PWM <name> <rows>`, got {header:?}"),
            });
        }
        let n_rows: usize = fields[2].parse().map_err(|_| Error::Parse {
            line: 1,
            msg: format!("bad row count {:?}", fields[2]),
        })?;
        let mut rows = Vec::with_capacity(n_rows);
        for (idx, line) in lines {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad probability: {e}"),
                })?;
            if vals.len() != 4 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected 4 probabilities, got {}", vals.len()),
                });
            }
            rows.push([vals[0], vals[1], vals[2], vals[3]]);
        }
        if rows.len() != n_rows {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header declares {n_rows} rows, found {}", rows.len()),
            });
        }
        Pwm::new(fields[1], rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Pwm::parse(&text)
    }

    pub fn to_file_string(&self) -> String {
        let mut s = format!("#PWM {} {}\n", self.name, self.rows.len());
        for row in &self.rows {
            let _ = writeln!(s, "{} {} {} {}", row[0], row[1], row[2], row[3]);
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seq_length: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub cluster_min: usize,
    pub cluster_max: usize,
    pub cluster_region_fraction: f64,
    pub background_freqs: [f64; 4],
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seq_length: 1500,
            n_positive: 10_000,
            n_negative: 10_000,
            cluster_min: 2,
            cluster_max: 5,
            cluster_region_fraction: 0.6,
            background_freqs: [0.25; 4],
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, pwm: &Pwm) -> Result<()> {
        validate_freqs(&self.background_freqs)?;
        if self.seq_length < pwm.rows() {
            return Err(Error::Config(format!(
                "seq_length {} is shorter than the motif ({} bp)",
                self.seq_length,
                pwm.rows()
            )));
        }
        if self.cluster_min < 1 || self.cluster_min > self.cluster_max {
            return Err(Error::Config(format!(
                "cluster_min/cluster_max must satisfy 1 <= min <= max, got {}/{}",
                self.cluster_min, self.cluster_max
            )));
        }
        if !(self.cluster_region_fraction > 0.0 && self.cluster_region_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "cluster_region_fraction must be in (0, 1], got {}",
                self.cluster_region_fraction
            )));
        }
        let region = self.region().len();
        if self.cluster_max * pwm.rows() > region {
            return Err(Error::Config(format!(
                "cluster_max ({}) motifs of {} bp do not fit the {region} bp cluster region",
                self.cluster_max,
                pwm.rows()
            )));
        }
        Ok(())
    }

    /// Central window eligible for motif placement.
    pub fn region(&self) -> Range<usize> {
        let len = (self.cluster_region_fraction * self.seq_length as f64 + 1e-9).floor() as usize;
        let len = len.min(self.seq_length);
        let start = (self.seq_length - len) / 2;
        start..start + len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    pub id: String,
    pub bases: String,
    pub label: u8,
    pub motif_positions: Vec<usize>,
}

fn validate_freqs(freqs: &[f64; 4]) -> Result<()> {
    if freqs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Validation(format!(
            "background frequencies must lie in [0, 1]: {freqs:?}"
        )));
    }
    let s: f64 = freqs.iter().sum();
    if (s - 1.0).abs() > 1e-6 {
        return Err(Error::Validation(format!(
            "background frequencies sum to {s}, not 1"
        )));
    }
    Ok(())
}

pub fn sample_background(length: usize, freqs: &[f64; 4], rng: &mut SimRng) -> Result<String> {
    validate_freqs(freqs)?;
    let bytes: Vec<u8> = (0..length).map(|_| BASES[rng.categorical(freqs)]).collect();
    Ok(String::from_utf8(bytes).expect("ACGT is ascii"))
}

pub fn sample_motif_instance(pwm: &Pwm, rng: &mut SimRng) -> String {
    pwm.matrix()
        .iter()
        .map(|row| BASES[rng.categorical(row)] as char)
        .collect()
}

/// Writes `count` motif instances at uniformly drawn, pairwise
/// non-overlapping starts inside `region`. Returns the new sequence and the
/// sorted start offsets.
pub fn embed_cluster(
    background: &str,
    pwm: &Pwm,
    count: usize,
    region: Range<usize>,
    rng: &mut SimRng,
) -> Result<(String, Vec<usize>)> {
    let width = pwm.rows();
    if region.end > background.len() || region.start > region.end {
        return Err(Error::Placement(format!(
            "region {region:?} lies outside a sequence of length {}",
            background.len()
        )));
    }
    if count == 0 {
        return Ok((background.to_string(), Vec::new()));
    }
    if region.len() < width {
        return Err(Error::Placement(format!(
            "region of {} bp cannot hold a {width} bp motif",
            region.len()
        )));
    }
    // sorted non-overlapping starts p_i map one-to-one onto distinct
    // q_i = p_i - i*(width-1) in 0..free, so a uniform k-subset of 0..free
    // is a uniform non-overlapping placement
    let n_starts = region.len() - width + 1;
    let free = n_starts as isize - (count as isize - 1) * (width as isize - 1);
    if free < count as isize {
        return Err(Error::Placement(format!(
            "{count} non-overlapping {width} bp motifs do not fit in {region:?}"
        )));
    }
    let free = free as usize;
    let mut seq = background.as_bytes().to_vec();
    let mut picks: Vec<usize> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let q = rng.below(free);
            if !picks.contains(&q) {
                picks.push(q);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Placement(format!(
                "could not place {count} non-overlapping {width} bp motifs in {region:?} \
                 after {PLACEMENT_ATTEMPTS} attempts"
            )));
        }
    }
    picks.sort_unstable();
    let mut positions: Vec<usize> = picks
        .iter()
        .enumerate()
        .map(|(i, &q)| region.start + q + i * (width - 1))
        .collect();
    positions.sort_unstable();
    for &p in &positions {
        let instance = sample_motif_instance(pwm, rng);
        seq[p..p + width].copy_from_slice(instance.as_bytes());
    }
    Ok((String::from_utf8(seq).expect("ACGT is ascii"), positions))
}

/// `n_positive` labelled-1 records followed by `n_negative` labelled-0
/// records, fully determined by `config.seed`.
pub fn generate_dataset(config: &SimConfig, pwm: &Pwm) -> Result<Vec<SequenceRecord>> {
    config.validate(pwm)?;
    let mut rng = SimRng::new(config.seed);
    let region = config.region();
    let consensus = pwm.consensus();
    let total = config.n_positive + config.n_negative;
    let mut records = Vec::with_capacity(total);
    for i in 0..config.n_positive {
        let bg = sample_background(config.seq_length, &config.background_freqs, &mut rng)?;
        let count = config.cluster_min + rng.below(config.cluster_max - config.cluster_min + 1);
        let (bases, motif_positions) = embed_cluster(&bg, pwm, count, region.clone(), &mut rng)?;
        records.push(SequenceRecord {
            id: format!("seq_{i:05}"),
            bases,
            label: 1,
            motif_positions,
        });
    }
    for i in config.n_positive..total {
        let mut bases = None;
        for _ in 0..NEGATIVE_RETRIES {
            let bg = sample_background(config.seq_length, &config.background_freqs, &mut rng)?;
            if !bg.contains(&consensus) {
                bases = Some(bg);
                break;
            }
        }
        let bases = bases.ok_or_else(|| {
            Error::Placement(format!(
                "negative {i} kept matching consensus {consensus} after {NEGATIVE_RETRIES} draws"
            ))
        })?;
        records.push(SequenceRecord {
            id: format!("seq_{i:05}"),
            bases,
            label: 0,
            motif_positions: Vec::new(),
        });
    }
    Ok(records)
}

pub fn format_fasta(records: &[SequenceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let motifs = if r.motif_positions.is_empty() {
            "none".to_string()
        } else {
            r.motif_positions
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(out, ">{} label={} motifs={}", r.id, r.label, motifs);
        for chunk in r.bases.as_bytes().chunks(FASTA_WIDTH) {
            out.push_str(std::str::from_utf8(chunk).expect("ascii"));
            out.push('\n');
        }
    }
    out
}

pub fn write_fasta(records: &[SequenceRecord], path: &Path) -> Result<()> {
    fs::write(path, format_fasta(records)).map_err(|e| Error::io(path, e))
}

pub fn read_fasta(path: &Path) -> Result<Vec<SequenceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fasta(&text)
}

fn parse_header(line: &str, lineno: usize) -> Result<SequenceRecord> {
    let bad = |msg: String| Error::Parse { line: lineno, msg };
    let mut tokens = line[1..].split_whitespace();
    let id = tokens
        .next()
        .ok_or_else(|| bad("header has no identifier".into()))?
        .to_string();
    let mut label = None;
    let mut motifs = None;
    for tok in tokens {
        if let Some(v) = tok.strip_prefix("label=") {
            label = Some(match v {
                "0" => 0u8,
                "1" => 1u8,
                _ => return Err(bad(format!("label must be 0 or 1, got {v:?}"))),
            });
        } else if let Some(v) = tok.strip_prefix("motifs=") {
            motifs = Some(if v == "none" {
                Vec::new()
            } else {
                v.split(',')
                    .map(|p| p.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad(format!("bad motif list {v:?}")))?
            });
        } else {
            return Err(bad(format!("unknown header field {tok:?}")));
        }
    }
    Ok(SequenceRecord {
        id,
        bases: String::new(),
        label: label.ok_or_else(|| bad("missing label=".into()))?,
        motif_positions: motifs.ok_or_else(|| bad("missing motifs=".into()))?,
    })
}

pub fn parse_fasta(text: &str) -> Result<Vec<SequenceRecord>> {
    let mut records: Vec<SequenceRecord> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.starts_with('>') {
            records.push(parse_header(line, lineno)?);
        } else if line.is_empty() {
            continue;
        } else {
            let rec = records.last_mut().ok_or(Error::Parse {
                line: lineno,
                msg: "sequence data before the first header".into(),
            })?;
            if let Some((col, c)) = line.chars().enumerate().find(|(_, c)| !"ACGT".contains(*c)) {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("non-ACGT character {c:?} at column {}", col + 1),
                });
            }
            rec.bases.push_str(line);
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_background() {
        let mut rng = SimRng::new(1);
        assert_eq!(
            sample_background(5, &[1.0, 0.0, 0.0, 0.0], &mut rng).unwrap(),
            "AAAAA"
        );
        assert_eq!(sample_background(0, &[0.25; 4], &mut rng).unwrap(), "");
        assert!(sample_background(3, &[0.5, 0.5, 0.5, 0.0], &mut rng).is_err());
    }

    #[test]
    fn uniform_background_frequencies() {
        let mut rng = SimRng::new(2);
        let s = sample_background(100_000, &[0.25; 4], &mut rng).unwrap();
        for b in BASES {
            let f = s.bytes().filter(|&c| c == b).count() as f64 / 1e5;
            assert!((f - 0.25).abs() < 0.01, "{} at {f}", b as char);
        }
    }

    #[test]
    fn deterministic_pwm_gives_consensus() {
        let pwm = Pwm::from_consensus("x", "CAGATG", 1.0).unwrap();
        let mut rng = SimRng::new(3);
        assert_eq!(sample_motif_instance(&pwm, &mut rng), "CAGATG");
        let g = Pwm::new("g", vec![[0.0, 0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(sample_motif_instance(&g, &mut rng), "G");
    }

    #[test]
    fn motif_position_frequencies() {
        let pwm = Pwm::new(
            "mix",
            vec![[0.7, 0.1, 0.1, 0.1], [0.25, 0.25, 0.25, 0.25], [0.0, 0.5, 0.0, 0.5]],
        )
        .unwrap();
        let mut rng = SimRng::new(4);
        let n = 100_000;
        let mut counts = [[0usize; 4]; 3];
        for _ in 0..n {
            for (r, b) in sample_motif_instance(&pwm, &mut rng).bytes().enumerate() {
                counts[r][base_index(b).unwrap()] += 1;
            }
        }
        for r in 0..3 {
            for k in 0..4 {
                let f = counts[r][k] as f64 / n as f64;
                assert!((f - pwm.matrix()[r][k]).abs() < 0.01);
            }
        }
    }

    #[test]
    fn pwm_validation() {
        assert!(Pwm::new("e", vec![]).is_err());
        assert!(Pwm::new("s", vec![[0.5, 0.5, 0.5, 0.0]]).is_err());
        assert!(Pwm::new("n", vec![[1.2, -0.2, 0.0, 0.0]]).is_err());
        let d = Pwm::default_tal1();
        assert_eq!(d.rows(), 10);
        assert!(d.consensus().contains("CAGATG"));
    }

    #[test]
    fn pwm_file_round_trip_and_errors() {
        let d = Pwm::default_tal1();
        assert_eq!(Pwm::parse(&d.to_file_string()).unwrap(), d);
        assert!(matches!(
            Pwm::parse("#PWM a 2\n0.25 0.25 0.25 0.25\n"),
            Err(Error::Parse { .. })
        ));
        let err = Pwm::parse("#PWM a 1\n0.25 0.25 x 0.25\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn embed_zero_is_identity() {
        let pwm = Pwm::default_tal1();
        let mut rng = SimRng::new(5);
        let (s, p) = embed_cluster("ACGTACGTACGTACGT", &pwm, 0, 0..16, &mut rng).unwrap();
        assert_eq!(s, "ACGTACGTACGTACGT");
        assert!(p.is_empty());
    }

    #[test]
    fn embed_single_instance_diff() {
        let pwm = Pwm::from_consensus("e", "CAGATG", 1.0).unwrap();
        let bg = "A".repeat(40);
        let mut rng = SimRng::new(6);
        let (s, pos) = embed_cluster(&bg, &pwm, 1, 0..40, &mut rng).unwrap();
        assert_eq!(pos.len(), 1);
        let p = pos[0];
        assert_eq!(&s[p..p + 6], "CAGATG");
        let diff: Vec<usize> = s
            .bytes()
            .zip(bg.bytes())
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect();
        // CAGATG vs AAAAAA differs at C,G,T,G (A positions coincide)
        assert!(diff.iter().all(|&i| i >= p && i < p + 6));
        assert_eq!(&s[..p], &bg[..p]);
        assert_eq!(&s[p + 6..], &bg[p + 6..]);
    }

    #[test]
    fn embed_positions_disjoint_and_in_region() {
        let pwm = Pwm::default_tal1();
        let mut rng = SimRng::new(7);
        for _ in 0..200 {
            let bg = sample_background(200, &[0.25; 4], &mut rng).unwrap();
            let (s, pos) = embed_cluster(&bg, &pwm, 5, 40..160, &mut rng).unwrap();
            assert_eq!(s.len(), 200);
            assert!(pos.windows(2).all(|w| w[0] + 10 <= w[1]));
            assert!(pos.iter().all(|&p| p >= 40 && p + 10 <= 160));
        }
    }

    #[test]
    fn embed_impossible_fit() {
        let pwm = Pwm::default_tal1();
        let mut rng = SimRng::new(8);
        let bg = "A".repeat(30);
        assert!(matches!(
            embed_cluster(&bg, &pwm, 3, 0..25, &mut rng),
            Err(Error::Placement(_))
        ));
    }

    #[test]
    fn small_dataset_bookkeeping() {
        let cfg = SimConfig {
            seq_length: 100,
            n_positive: 2,
            n_negative: 2,
            seed: 11,
            ..SimConfig::default()
        };
        let recs = generate_dataset(&cfg, &Pwm::default_tal1()).unwrap();
        let labels: Vec<u8> = recs.iter().map(|r| r.label).collect();
        assert_eq!(labels, vec![1, 1, 0, 0]);
        for r in &recs {
            assert_eq!(r.bases.len(), 100);
            assert_eq!(r.label == 1, !r.motif_positions.is_empty());
            assert!(r.motif_positions.len() <= 5);
        }
    }

    #[test]
    fn config_rejects_overfull_region() {
        let cfg = SimConfig {
            seq_length: 50,
            cluster_max: 5,
            ..SimConfig::default()
        };
        assert!(matches!(
            cfg.validate(&Pwm::default_tal1()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn fasta_header_grammar() {
        let text = ">seq_0001 label=1 motifs=12,400\nACGT\nAC\n>n label=0 motifs=none\nGG\n";
        let recs = parse_fasta(text).unwrap();
        assert_eq!(recs[0].id, "seq_0001");
        assert_eq!(recs[0].motif_positions, vec![12, 400]);
        assert_eq!(recs[0].bases, "ACGTAC");
        assert!(recs[1].motif_positions.is_empty());
        assert_eq!(recs[1].label, 0);
    }

    #[test]
    fn fasta_errors_carry_line_numbers() {
        let err = parse_fasta(">a label=1 motifs=none\nACGN\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_fasta(">a label=2 motifs=none\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_fasta("ACGT\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_fasta(">a motifs=none\nA\n").unwrap_err();
        assert!(err.to_string().contains("label"));
    }

    #[test]
    fn fasta_wraps_at_80() {
        let r = SequenceRecord {
            id: "x".into(),
            bases: "A".repeat(170),
            label: 0,
            motif_positions: vec![],
        };
        let text = format_fasta(&[r]);
        let lens: Vec<usize> = text.lines().skip(1).map(str::len).collect();
        assert_eq!(lens, vec![80, 80, 10]);
    }

    #[test]
    fn placement_is_uniform_over_configurations() {
        let pwm = Pwm::from_consensus("ab", "AC", 0.97).unwrap();
        let mut rng = SimRng::new(17);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..30_000 {
            let (_, pos) = embed_cluster("TTTTT", &pwm, 2, 0..5, &mut rng).unwrap();
            *counts.entry(pos).or_insert(0usize) += 1;
        }
        // valid sorted starts: (0,2) (0,3) (1,3)
        assert_eq!(counts.len(), 3);
        for c in counts.values() {
            assert!((*c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn dense_clusters_always_place() {
        let pwm = Pwm::default_tal1();
        let mut rng = SimRng::new(3);
        for _ in 0..200 {
            let (_, pos) = embed_cluster(&"A".repeat(60), &pwm, 5, 5..55, &mut rng).unwrap();
            assert!(pos.windows(2).all(|w| w[1] >= w[0] + 10));
        }
    }
}
