//! `dcnn` command-line front end.
//!
//! Every command reads an optional JSON run configuration (`--config`) whose
//! sections mirror the library config types; flags given on the command line
//! override it. The effective configuration is written next to each output
//! as `run_config.json`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or validation
//! error, 3 numeric divergence.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::collective::StrategyKind;
use crate::error::{Error, Result};
use crate::genome_sim::{generate_dataset, read_fasta, write_fasta, Pwm, SequenceRecord, SimConfig};
use crate::model::{load_checkpoint, save_checkpoint, ModelConfig};
use crate::pipeline::{per_replica, split, PipelineConfig, SplitSpec};
use crate::tensor::Precision;
use crate::trainer::{
    benchmark, evaluate, train_any, write_benchmark_csv, AnyParams, EvalMetrics, TrainConfig, TrainReport,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub split: SplitSpec,
    pub pipeline: PipelineConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Overrides `pipeline.batch_per_replica` when set.
    pub global_batch: Option<usize>,
    pub pwm: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::Config(format!("config file {} does not exist", path.display())));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Copies the batching fields of the pipeline section into the trainer
    /// config, resolving `global_batch` against the replica count.
    fn resolve_batching(&mut self) -> Result<()> {
        if let Some(g) = self.global_batch {
            self.pipeline.batch_per_replica = per_replica(g, self.pipeline.n_replicas)?;
        }
        self.pipeline.validate()?;
        self.train.n_replicas = self.pipeline.n_replicas;
        self.train.batch_per_replica = self.pipeline.batch_per_replica;
        self.train.shuffle_buffer_size = self.pipeline.shuffle_buffer_size;
        self.train.validate()
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let p = dir.join("run_config.json");
        fs::write(&p, serde_json::to_string_pretty(self).expect("config serialises")).map_err(|e| Error::io(&p, e))
    }
}

#[derive(Debug, Parser)]
#[command(name = "dcnn", version, about = "Data-parallel CNN for motif-cluster detection in simulated DNA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a labelled dataset and write it as FASTA.
    Generate(GenerateArgs),
    /// Split a dataset, train, evaluate on the test split and save a checkpoint.
    Train(TrainArgs),
    /// Fixed-epoch timing sweep over worker counts and strategies.
    Benchmark(BenchmarkArgs),
    /// Score a checkpoint on a dataset.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for simulation, splitting, initialisation and shuffling.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<StrategyKind>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, value_parser = parse_precision)]
    pub precision: Option<Precision>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n_positive: Option<usize>,
    #[arg(long)]
    pub n_negative: Option<usize>,
    #[arg(long)]
    pub seq_length: Option<usize>,
    /// PWM file; the built-in TAL1-like matrix is used otherwise.
    #[arg(long)]
    pub pwm: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// FASTA dataset written by `generate`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub batch_per_replica: Option<usize>,
    /// Global batch; must be divisible by the worker count.
    #[arg(long)]
    pub global_batch: Option<usize>,
    /// Optimizer steps between gossip rounds.
    #[arg(long)]
    pub gossip_period: Option<usize>,
    /// Disable early stopping and run every epoch.
    #[arg(long)]
    pub no_early_stop: bool,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Comma-separated worker counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub workers_list: Vec<usize>,
    /// Comma-separated strategies for the sweep; defaults to `--strategy`.
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    pub strategies: Vec<StrategyKind>,
    /// Global batch held fixed across worker counts.
    #[arg(long)]
    pub global_batch: Option<usize>,
    #[arg(long)]
    pub gossip_period: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitChoice {
    All,
    Train,
    Test,
    Validation,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Which part of the dataset to score, using the configured split.
    #[arg(long, value_enum, default_value = "all")]
    pub split: SplitChoice,
}

fn parse_strategy(s: &str) -> std::result::Result<StrategyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_precision(s: &str) -> std::result::Result<Precision, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn base_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.sim.seed = s;
        cfg.split.seed = s;
        cfg.train.seed = s;
    }
    if let Some(w) = c.workers {
        cfg.pipeline.n_replicas = w;
    }
    if let Some(s) = c.strategy {
        cfg.train.strategy = s;
    }
    if let Some(e) = c.epochs {
        cfg.train.epochs_max = e;
    }
    if let Some(p) = c.precision {
        cfg.train.precision = p;
    }
    if let Some(o) = &c.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn existing(path: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
    let p = path.ok_or_else(|| Error::Config(format!("no {what} given (use --{what})")))?;
    if !p.exists() {
        return Err(Error::Config(format!("{what} file {} does not exist", p.display())));
    }
    Ok(p.clone())
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    cfg.write(&dir)?;
    Ok(dir)
}

fn dataset_length(records: &[SequenceRecord], path: &Path) -> Result<usize> {
    let first = records
        .first()
        .ok_or_else(|| Error::Validation(format!("{} contains no records", path.display())))?;
    Ok(first.bases.len())
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    if let Some(v) = a.n_positive {
        cfg.sim.n_positive = v;
    }
    if let Some(v) = a.n_negative {
        cfg.sim.n_negative = v;
    }
    if let Some(v) = a.seq_length {
        cfg.sim.seq_length = v;
    }
    if a.pwm.is_some() {
        cfg.pwm = a.pwm;
    }
    let pwm = match &cfg.pwm {
        Some(p) => Pwm::load(&existing(Some(p), "pwm")?)?,
        None => Pwm::default_tal1(),
    };
    cfg.sim.validate(&pwm)?;
    let records = generate_dataset(&cfg.sim, &pwm)?;
    let dir = prepare_out(&cfg)?;
    let path = dir.join("dataset.fa");
    write_fasta(&records, &path)?;
    let pos = records.iter().filter(|r| r.label == 1).count();
    println!(
        "wrote {} records ({pos} positive, {} negative) to {}",
        records.len(),
        records.len() - pos,
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ReportFile<'a> {
    #[serde(flatten)]
    report: &'a TrainReport,
    run_config: &'a RunConfig,
}

fn write_report(report: &TrainReport, cfg: &RunConfig, dir: &Path) -> Result<()> {
    let p = dir.join("report.json");
    let text = serde_json::to_string_pretty(&ReportFile { report, run_config: cfg }).expect("report serialises");
    fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    report.write_curves_csv(&dir.join("curves.csv"))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    if a.dataset.is_some() {
        cfg.dataset = a.dataset;
    }
    if let Some(b) = a.batch_per_replica {
        cfg.pipeline.batch_per_replica = b;
    }
    if a.global_batch.is_some() {
        cfg.global_batch = a.global_batch;
    }
    if let Some(g) = a.gossip_period {
        cfg.train.gossip_period = g;
    }
    if a.no_early_stop {
        cfg.train.early_stop = None;
    }
    cfg.resolve_batching()?;
    let data_path = existing(cfg.dataset.as_ref(), "dataset")?;
    let records = read_fasta(&data_path)?;
    cfg.model.seq_length = dataset_length(&records, &data_path)?;
    cfg.model.validate()?;
    let splits = split(&records, &cfg.split)?;
    let dir = prepare_out(&cfg)?;

    let (params, mut report) = match train_any(&cfg.train, &cfg.model, &splits.train, &splits.validation) {
        Ok(ok) => ok,
        Err(Error::Diverged { last_good_epoch, partial }) => {
            if let Some(r) = &partial {
                write_report(r, &cfg, &dir)?;
            }
            return Err(Error::Diverged { last_good_epoch, partial });
        }
        Err(e) => return Err(e),
    };
    let ckpt = dir.join("model.ckpt");
    let test = if splits.test.is_empty() {
        None
    } else {
        Some(match &params {
            AnyParams::F32(p) => evaluate(p, &cfg.model, &splits.test)?,
            AnyParams::F64(p) => evaluate(p, &cfg.model, &splits.test)?,
        })
    };
    match &params {
        AnyParams::F32(p) => save_checkpoint(p, &cfg.model, &ckpt)?,
        AnyParams::F64(p) => save_checkpoint(p, &cfg.model, &ckpt)?,
    }
    report.test = test;
    write_report(&report, &cfg, &dir)?;
    if let Some(e) = report.final_epoch() {
        println!(
            "epochs {} ({:?}) val_loss {:.4} val_acc {:.4} val_auroc {} val_auprc {} wall {:.2}s",
            report.epochs.len(),
            report.stop_reason,
            e.val_loss,
            e.val_accuracy,
            e.val_auroc,
            e.val_auprc,
            report.total_wall_seconds
        );
    }
    if let Some(t) = report.test {
        print_metrics("test", &t);
    }
    Ok(())
}

fn print_metrics(label: &str, m: &EvalMetrics) {
    println!(
        "{label}: n {} loss {:.4} accuracy {:.4} auroc {} auprc {}",
        m.n, m.loss, m.accuracy, m.auroc, m.auprc
    );
}

fn cmd_benchmark(a: BenchmarkArgs) -> Result<bool> {
    let mut cfg = base_config(&a.common)?;
    if a.dataset.is_some() {
        cfg.dataset = a.dataset;
    }
    if a.global_batch.is_some() {
        cfg.global_batch = a.global_batch;
    }
    if let Some(g) = a.gossip_period {
        cfg.train.gossip_period = g;
    }
    if a.workers_list.is_empty() || a.workers_list.contains(&0) {
        return Err(Error::Config("workers_list must hold positive worker counts".into()));
    }
    let strategies = if a.strategies.is_empty() {
        vec![cfg.train.strategy]
    } else {
        a.strategies
    };
    let global = cfg.global_batch.unwrap_or_else(|| cfg.pipeline.global_batch());
    cfg.global_batch = Some(global);
    cfg.train.early_stop = None;
    cfg.train.shuffle_buffer_size = cfg.pipeline.shuffle_buffer_size;
    cfg.train.validate()?;
    let data_path = existing(cfg.dataset.as_ref(), "dataset")?;
    let records = read_fasta(&data_path)?;
    cfg.model.seq_length = dataset_length(&records, &data_path)?;
    cfg.model.validate()?;
    let splits = split(&records, &cfg.split)?;
    let dir = prepare_out(&cfg)?;
    let rows = benchmark(
        &cfg.train,
        &cfg.model,
        global,
        &a.workers_list,
        &strategies,
        &splits.train,
        &splits.validation,
    );
    write_benchmark_csv(&rows, &dir.join("benchmark.csv"))?;
    println!("workers strategy   wall_s  speedup  seq/s");
    for r in &rows {
        match &r.error {
            None => println!(
                "{:>7} {:<9} {:>7.2} {:>8.2} {:>6.0}",
                r.workers,
                r.strategy.as_str(),
                r.wall_seconds,
                r.speedup.unwrap_or(f64::NAN),
                r.sequences_per_second
            ),
            Some(e) => println!("{:>7} {:<9} error: {e}", r.workers, r.strategy.as_str()),
        }
    }
    Ok(rows.iter().any(|r| r.is_ok()))
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    if a.checkpoint.is_some() {
        cfg.checkpoint = a.checkpoint;
    }
    if a.dataset.is_some() {
        cfg.dataset = a.dataset;
    }
    let ckpt = existing(cfg.checkpoint.as_ref(), "checkpoint")?;
    let data_path = existing(cfg.dataset.as_ref(), "dataset")?;
    let records = read_fasta(&data_path)?;
    let chosen = match a.split {
        SplitChoice::All => records,
        other => {
            let s = split(&records, &cfg.split)?;
            match other {
                SplitChoice::Train => s.train,
                SplitChoice::Test => s.test,
                _ => s.validation,
            }
        }
    };
    let metrics = match cfg.train.precision {
        Precision::F32 => {
            let (model, params) = load_checkpoint::<f32>(&ckpt)?;
            check_length(&model, &chosen)?;
            cfg.model = model;
            evaluate(&params, &model, &chosen)?
        }
        Precision::F64 => {
            let (model, params) = load_checkpoint::<f64>(&ckpt)?;
            check_length(&model, &chosen)?;
            cfg.model = model;
            evaluate(&params, &model, &chosen)?
        }
    };
    let dir = prepare_out(&cfg)?;
    let p = dir.join("metrics.json");
    fs::write(&p, serde_json::to_string_pretty(&metrics).expect("metrics serialise")).map_err(|e| Error::io(&p, e))?;
    print_metrics("evaluate", &metrics);
    Ok(())
}

fn check_length(model: &ModelConfig, records: &[SequenceRecord]) -> Result<()> {
    if let Some(r) = records.iter().find(|r| r.bases.len() != model.seq_length) {
        return Err(Error::Validation(format!(
            "sequence length mismatch: checkpoint expects L = {}, found L = {} in record {}",
            model.seq_length,
            r.bases.len(),
            r.id
        )));
    }
    Ok(())
}

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => 1,
        Error::Diverged { .. } => 3,
        _ => 2,
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a).map(|_| 0),
        Command::Train(a) => cmd_train(a).map(|_| 0),
        Command::Benchmark(a) => cmd_benchmark(a).map(|any_ok| if any_ok { 0 } else { 2 }),
        Command::Evaluate(a) => cmd_evaluate(a).map(|_| 0),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os())
}
