//! Acceptance suite. Runs every criterion, prints one PASS / FAIL / SKIP
//! line each and exits non-zero if any criterion failed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use dcnn::collective::{
    gossip_exchange, gossip_finalize, gossip_finalize_distributed, gossip_round, ring_all_reduce, spmd, StrategyKind,
};
use dcnn::genome_sim::{generate_dataset, read_fasta, write_fasta, Pwm, SimConfig};
use dcnn::model::{
    backward, decode_checkpoint, encode_checkpoint, forward, init_params, load_checkpoint, save_checkpoint,
    ModelConfig, ModelParams,
};
use dcnn::pipeline::{decode, one_hot, split, Batch, SplitSpec};
use dcnn::rng::SimRng;
use dcnn::tensor::{Precision, Scalar};
use dcnn::trainer::{auprc, auroc, benchmark, train, write_benchmark_csv, TrainConfig};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn criterion_1() -> Outcome {
    let records = common::dataset(2000, 2000, 500, 1);
    let s = split(&records, &SplitSpec { seed: 1, ..SplitSpec::default() }).unwrap();
    let cfg = TrainConfig {
        epochs_max: 30,
        seed: 1,
        ..TrainConfig::default()
    };
    let model = ModelConfig {
        seq_length: 500,
        ..ModelConfig::default()
    };
    let t = train::<f32>(&cfg, &model, &s.train, &s.validation).unwrap();
    let last = t.report.final_epoch().unwrap();
    let auc = last.val_auroc.0.unwrap_or(0.0);
    check(
        last.val_accuracy >= 0.90 && auc >= 0.95,
        format!(
            "val accuracy {:.4} (>= 0.90), val auROC {auc:.4} (>= 0.95) after {} epochs ({:?}) in {:.1}s",
            last.val_accuracy,
            t.report.epochs.len(),
            t.report.stop_reason,
            t.report.total_wall_seconds
        ),
    )
}

fn equivalence_gap<T: Scalar + dcnn::collective::Element>(precision: Precision) -> f64 {
    let train_set = common::dataset(1280, 1280, 200, 2);
    let val = common::dataset(50, 50, 200, 3);
    let model = ModelConfig {
        seq_length: 200,
        ..ModelConfig::default()
    };
    let base = TrainConfig {
        epochs_max: 10,
        early_stop: None,
        precision,
        seed: 2,
        ..TrainConfig::default()
    };
    let one = TrainConfig {
        n_replicas: 1,
        batch_per_replica: 256,
        ..base
    };
    let four = TrainConfig {
        n_replicas: 4,
        batch_per_replica: 64,
        ..base
    };
    let a = train::<T>(&one, &model, &train_set, &val).unwrap();
    let b = train::<T>(&four, &model, &train_set, &val).unwrap();
    assert_eq!(a.report.steps, 100);
    assert_eq!(b.report.steps, 100);
    let fa: Vec<f64> = a.params.flatten().iter().map(|x| x.to_f64_lossy()).collect();
    let fb: Vec<f64> = b.params.flatten().iter().map(|x| x.to_f64_lossy()).collect();
    common::linf(&fa, &fb)
}

fn criterion_2() -> Outcome {
    let g32 = equivalence_gap::<f32>(Precision::F32);
    let g64 = equivalence_gap::<f64>(Precision::F64);
    check(
        g32 <= 1e-4 && g64 <= 1e-8,
        format!("after 100 steps, L-inf gap f32 {g32:.3e} (<= 1e-4), f64 {g64:.3e} (<= 1e-8)"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = SimRng::new(3);
    let mut worst_rel = 0.0f64;
    let mut cases = 0;
    for n in [1usize, 2, 3, 4, 8] {
        for d in [1usize, 5, 1246, 10_000] {
            let ints: Vec<Vec<i64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.below(2_000_001) as i64 - 1_000_000).collect())
                .collect();
            let expect = common::gather_sum_i64(&ints);
            let (out, stats) = spmd::<i64, _, _>(n, |ep| {
                let mut v = ints[ep.rank()].clone();
                ring_all_reduce(&ep, &mut v)?;
                Ok(v)
            });
            for r in out {
                if r.unwrap() != expect {
                    return Fail(format!("integer mismatch at N={n} D={d}"));
                }
            }
            let msgs = (2 * n * (n - 1)) as u64;
            if stats.messages() != msgs {
                return Fail(format!("N={n} D={d}: {} messages, expected {msgs}", stats.messages()));
            }

            let floats: Vec<Vec<f32>> = (0..n)
                .map(|_| (0..d).map(|_| (rng.next_f64() * 2.0 - 1.0) as f32).collect())
                .collect();
            let (sum, scale) = common::gather_sum_f64(&floats);
            let (out, stats) = spmd::<f32, _, _>(n, |ep| {
                let mut v = floats[ep.rank()].clone();
                ring_all_reduce(&ep, &mut v)?;
                Ok(v)
            });
            if stats.messages() != msgs {
                return Fail(format!("f32 N={n} D={d}: {} messages, expected {msgs}", stats.messages()));
            }
            for r in out {
                let r = r.unwrap();
                for i in 0..d {
                    let rel = (r[i] as f64 - sum[i]).abs() / scale[i].max(f64::MIN_POSITIVE);
                    worst_rel = worst_rel.max(rel);
                }
            }
            cases += 1;
        }
    }
    check(
        worst_rel <= 1e-6,
        format!("{cases} (N, D) cases exact in i64, 2N(N-1) messages each, worst f32 relative error {worst_rel:.2e} (<= 1e-6)"),
    )
}

/// Seeds a tiny problem whose ReLU pre-activations and maxpool winners all
/// sit at least `margin` away from a kink or a tie.
fn kink_free_problem(config: &ModelConfig, margin: f64) -> (ModelParams<f64>, Batch<f64>, u64) {
    for seed in 0..10_000u64 {
        let mut params = init_params::<f64>(config, seed).unwrap();
        for b in params.conv_bias.data_mut() {
            *b = 0.25;
        }
        let mut rng = SimRng::new(seed ^ 0xfd);
        let recs: Vec<_> = (0..4)
            .map(|i| dcnn::genome_sim::SequenceRecord {
                id: format!("g{i}"),
                bases: common::random_bases(config.seq_length, &mut rng),
                label: (i % 2) as u8,
                motif_positions: vec![],
            })
            .collect();
        let batch = Batch::<f64>::from_records(&recs).unwrap();
        let mut ok = true;
        'samples: for i in 0..4 {
            let x = dcnn::tensor::Tensor::new(vec![config.seq_length, 4], batch.sample(i).to_vec()).unwrap();
            let z = dcnn::tensor::conv1d_forward(&x, &params.conv_filters, &params.conv_bias).unwrap();
            let f = config.n_filters;
            if z.data().iter().any(|v| v.abs() <= margin) {
                ok = false;
                break;
            }
            for o in 0..config.pooled_len() {
                for c in 0..f {
                    let mut vals: Vec<f64> = (o * config.pool_stride..o * config.pool_stride + config.pool_window)
                        .map(|r| z.data()[r * f + c].max(0.0))
                        .collect();
                    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
                    if vals[0] <= margin || (vals.len() > 1 && vals[0] - vals[1] <= margin) {
                        ok = false;
                        break 'samples;
                    }
                }
            }
        }
        if ok {
            return (params, batch, seed);
        }
    }
    panic!("no kink-free problem found");
}

fn criterion_4() -> Outcome {
    let config = common::model(50, 2, 5, 5);
    let (params, batch, seed) = kink_free_problem(&config, 1e-3);
    let (_, cache) = forward(&params, &config, &batch).unwrap();
    let analytic = backward(&params, &cache, batch.labels.data()).unwrap().flatten();
    let numeric = common::numeric_gradient(&params, &config, &batch, 1e-5);
    let err = common::max_relative_error(&analytic, &numeric, 1e-6);
    check(
        err <= 1e-4,
        format!("{} parameters, max relative error {err:.2e} (<= 1e-4), problem seed {seed}", analytic.len()),
    )
}

fn criterion_5() -> Outcome {
    let records = common::dataset(735, 735, 1500, 5);
    let s = split(&records, &SplitSpec::default()).unwrap();
    let base = TrainConfig {
        epochs_max: 2,
        seed: 5,
        ..TrainConfig::default()
    };
    let rows = benchmark(
        &base,
        &ModelConfig::default(),
        256,
        &[1, 2, 4],
        &[StrategyKind::RingAllReduce],
        &s.train,
        &s.validation,
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("benchmark.csv");
    write_benchmark_csv(&rows, &path).unwrap();
    let csv = std::fs::read_to_string(&path).unwrap();
    println!("    benchmark table:");
    for line in csv.lines() {
        println!("      {line}");
    }
    if let Some(r) = rows.iter().find(|r| !r.is_ok()) {
        return Fail(format!("row {} workers failed: {:?}", r.workers, r.error));
    }
    let speedup4 = rows.iter().find(|r| r.workers == 4).and_then(|r| r.speedup).unwrap();
    let emitted = csv.lines().count() == 4 && csv.starts_with("workers,strategy,wall_s,speedup");
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if !emitted {
        return Fail("benchmark table incomplete".into());
    }
    if cores < 4 {
        return Skip(format!(
            "table and speedup emitted; 4-worker speedup {speedup4:.2}x not asserted (needs >= 4 cores, host has {cores})"
        ));
    }
    check(speedup4 >= 1.8, format!("4-worker speedup {speedup4:.2}x (>= 1.8) on {cores} cores"))
}

fn criterion_6() -> Outcome {
    let worked = auroc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).0;
    if worked != Some(0.75) {
        return Fail(format!("worked example gave {worked:?}"));
    }
    let mut rng = SimRng::new(6);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = 2 + rng.below(199);
        let tied = case % 4 == 0;
        let scores: Vec<f64> = (0..n)
            .map(|_| if tied { rng.below(10) as f64 / 10.0 } else { rng.next_f64() })
            .collect();
        let mut labels: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
        labels[0] = 0;
        labels[1] = 1;
        let a = auroc(&scores, &labels).0.unwrap();
        let b = common::auroc_pairs(&scores, &labels).unwrap();
        worst = worst.max((a - b).abs());
    }
    let mut worst_ap = 0.0f64;
    for pattern in 0u32..256 {
        let labels: Vec<u8> = (0..8).map(|i| ((pattern >> i) & 1) as u8).collect();
        for tied in [false, true] {
            let scores: Vec<f64> = (0..8)
                .map(|_| if tied { rng.below(3) as f64 } else { rng.next_f64() })
                .collect();
            match (auprc(&scores, &labels).0, common::auprc_thresholds(&scores, &labels)) {
                (Some(a), Some(b)) => worst_ap = worst_ap.max((a - b).abs()),
                (None, None) => {}
                other => return Fail(format!("auPRC definedness mismatch on pattern {pattern}: {other:?}")),
            }
        }
    }
    check(
        worst <= 1e-12 && worst_ap <= 1e-12,
        format!("auROC worst gap {worst:.1e} over 1000 cases, auPRC worst gap {worst_ap:.1e} over 256 patterns"),
    )
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let recs = common::dataset(100, 100, 150, 7);
    let val = common::dataset(20, 20, 150, 8);
    let model = common::model(150, 4, 8, 10);
    for n in [1, 3] {
        let cfg = TrainConfig {
            n_replicas: n,
            batch_per_replica: 24 / n,
            epochs_max: 3,
            seed: 7,
            ..TrainConfig::default()
        };
        let a = train::<f32>(&cfg, &model, &recs, &val).unwrap();
        let b = train::<f32>(&cfg, &model, &recs, &val).unwrap();
        if encode_checkpoint(&a.params, &model) != encode_checkpoint(&b.params, &model) {
            return Fail(format!("checkpoints differ between identical runs at N={n}"));
        }
        let p = dir.path().join(format!("m{n}.ckpt"));
        save_checkpoint(&a.params, &model, &p).unwrap();
        let (m2, p2) = load_checkpoint::<f32>(&p).unwrap();
        if m2 != model || p2 != a.params {
            return Fail("checkpoint file round trip lost information".into());
        }
        let (_, p3) = decode_checkpoint::<f32>(&encode_checkpoint(&p2, &m2)).unwrap();
        assert_eq!(p3, a.params);
    }
    let fa = dir.path().join("d.fa");
    write_fasta(&recs, &fa).unwrap();
    if read_fasta(&fa).unwrap() != recs {
        return Fail("FASTA round trip lost information".into());
    }
    let mut rng = SimRng::new(77);
    for _ in 0..200 {
        let len = 1 + rng.below(400);
        let s = common::random_bases(len, &mut rng);
        if decode(&one_hot::<f64>(&s).unwrap()).unwrap() != s {
            return Fail("one_hot / decode are not inverse".into());
        }
    }
    let full = generate_dataset(&SimConfig::default(), &Pwm::default_tal1()).unwrap();
    let pos = full.iter().filter(|r| r.label == 1).count();
    let s = split(&full, &SplitSpec::default()).unwrap();
    let sizes = (s.train.len(), s.test.len(), s.validation.len());
    check(
        full.len() == 20_000 && pos == 10_000 && sizes == (14_000, 2_000, 4_000),
        format!(
            "identical checkpoints at N=1 and N=3, lossless round trips, {} records ({pos} positive), split {sizes:?}",
            full.len()
        ),
    )
}

fn spread(v: &[Vec<f64>]) -> f64 {
    let mut s = 0.0f64;
    for a in v {
        for b in v {
            s = s.max(common::linf(a, b));
        }
    }
    s
}

fn criterion_8() -> Outcome {
    let mut rng = SimRng::new(8);
    let mut worst_mean = 0.0f64;
    for n in 2..=8 {
        let mut ints: Vec<Vec<i64>> = (0..n).map(|_| (0..16).map(|_| rng.below(10_001) as i64 - 5000).collect()).collect();
        let mut floats: Vec<Vec<f64>> = (0..n).map(|_| (0..16).map(|_| rng.next_f64() - 0.5).collect()).collect();
        let isum = common::gather_sum_i64(&ints);
        let fmean: Vec<f64> = (0..16).map(|i| floats.iter().map(|v| v[i]).sum::<f64>() / n as f64).collect();
        for r in 0..5 {
            gossip_round(&mut ints, r);
            gossip_round(&mut floats, r);
            if common::gather_sum_i64(&ints) != isum {
                return Fail(format!("integer sum changed at N={n} round {r}"));
            }
            let m: Vec<f64> = (0..16).map(|i| floats.iter().map(|v| v[i]).sum::<f64>() / n as f64).collect();
            worst_mean = worst_mean.max(common::linf(&m, &fmean));
        }
        gossip_finalize(&mut floats);
        gossip_finalize(&mut ints);
        if spread(&floats) != 0.0 || ints.iter().any(|v| v != &ints[0]) {
            return Fail(format!("replicas differ after finalize at N={n}"));
        }
    }

    // the N=4 fixture, run through the real transport
    let fixture: Vec<Vec<f64>> = (0..4).map(|r| vec![4.0 * r as f64, -2.0 * r as f64]).collect();
    let (out, _) = spmd::<f64, _, _>(4, |ep| {
        let mut v = fixture[ep.rank()].clone();
        let mut history = vec![v.clone()];
        for r in 0..5 {
            gossip_exchange(&ep, &mut v, r)?;
            history.push(v.clone());
        }
        gossip_finalize_distributed(&ep, &mut v)?;
        history.push(v);
        Ok(history)
    });
    let hist: Vec<Vec<Vec<f64>>> = out.into_iter().map(Result::unwrap).collect();
    let spreads: Vec<f64> = (0..7).map(|t| spread(&hist.iter().map(|h| h[t].clone()).collect::<Vec<_>>())).collect();
    let decreasing = spreads[..6].windows(2).all(|w| if w[0] > 0.0 { w[1] < w[0] } else { w[1] == 0.0 });
    check(
        worst_mean <= 1e-15 && decreasing && spreads[5] < spreads[0] && spreads[6] == 0.0,
        format!(
            "integer sums exact, float mean drift {worst_mean:.1e}, fixture spread over rounds {:?}, 0 after finalize",
            &spreads[..6]
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("desk-scale quality", criterion_1),
        ("large-batch equivalence", criterion_2),
        ("collective oracle", criterion_3),
        ("gradient check", criterion_4),
        ("scaling benchmark", criterion_5),
        ("metric oracles", criterion_6),
        ("determinism and round trips", criterion_7),
        ("gossip properties", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Skip(d) => ("SKIP", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} [{name}] {tag} ({secs:.1}s): {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
