use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use radix_topk::{
    batch_topk, f16, generate, oracle_topk, AtomicsMode, BatchInput, BatchOptions, BufferPolicy,
    DType, Distribution, DistributionSpec, EngineConfig, Instrumentation, InstrumentationSnapshot,
    ScaleMode, TopKResult,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::{parse_rank, AblateArgs, BenchArgs};
use crate::commands::create;
use crate::report::{checksum, same_result, write_rows};
use crate::value::CliValue;

#[derive(Clone, Debug, Default, Serialize)]
pub struct BenchRow {
    pub dist: String,
    pub dtype: &'static str,
    pub n: usize,
    pub k: String,
    pub batch: usize,
    pub repeats: usize,
    pub median_ms: Option<f64>,
    pub min_ms: Option<f64>,
    pub passes: Option<u64>,
    pub total_flushes: Option<u64>,
    pub global_merges: Option<u64>,
    pub elements_scanned: Option<u64>,
    pub filter_scanned: Option<u64>,
    pub modeled_transactions: Option<u64>,
    pub dispatch_rounds: Option<u64>,
    pub checksum: Option<String>,
    pub verified: Option<bool>,
    pub error: Option<String>,
}

fn bench_distribution(name: &str, dtype: DType) -> Result<Distribution> {
    let float = dtype != DType::U32;
    Ok(match name {
        "uniform" if float => Distribution::Uniform {
            low: 0.0,
            high: 1.0,
        },
        "uniform" => Distribution::Uniform {
            low: 0.0,
            high: u32::MAX as f64,
        },
        "normal" if float => Distribution::Normal {
            mean: 0.0,
            std_dev: 1.0,
        },
        "normal" => Distribution::Normal {
            mean: 2f64.powi(31),
            std_dev: 2f64.powi(28),
        },
        "zipf" => Distribution::Zipf { s: 1.1 },
        "adversarial" => Distribution::Uniform {
            low: 128.6,
            high: 128.7,
        },
        "peaked" => Distribution::Peaked {
            mass: 0.9,
            modes: 1,
            low: 0.0,
            high: 1e-3,
        },
        other => bail!("unknown distribution {other:?}"),
    })
}

fn median(times: &mut [Duration]) -> f64 {
    times.sort();
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    let m = times.len() / 2;
    if times.len() % 2 == 1 {
        ms(times[m])
    } else {
        (ms(times[m - 1]) + ms(times[m])) / 2.0
    }
}

fn fill(row: &mut BenchRow, times: &mut [Duration], s: &InstrumentationSnapshot) {
    row.median_ms = Some(median(times));
    row.min_ms = times.iter().min().map(|d| d.as_secs_f64() * 1e3);
    row.passes = Some(s.passes);
    row.total_flushes = Some(s.total_flushes());
    row.global_merges = Some(s.global_merges);
    row.elements_scanned = Some(s.elements_scanned);
    row.filter_scanned = Some(s.filter_scanned);
    row.modeled_transactions = Some(s.modeled_transactions);
    row.dispatch_rounds = Some(s.dispatch_rounds);
}

/// SHA-256 over the per-task checksums, in task order.
fn batch_checksum<T: CliValue>(results: &[TopKResult<T>]) -> String {
    let mut h = Sha256::new();
    for r in results {
        h.update(checksum(r).as_bytes());
    }
    hex::encode(h.finalize())
}

fn bench_cell<T: CliValue>(
    args: &BenchArgs,
    cfg: &EngineConfig,
    tasks: &[Vec<T>],
    k_token: &str,
    row: &mut BenchRow,
) -> Result<()> {
    let engine = &args.engine;
    let order = engine.order();
    let policy = engine.scale_policy()?;
    let repeats = args.repeats.max(1);
    let mut times = Vec::with_capacity(repeats);
    if tasks.len() == 1 {
        let input = &tasks[0];
        let k = parse_rank(k_token, input.len())?;
        let mut last = None;
        for _ in 0..repeats {
            let instr = Instrumentation::new(cfg.grid_size);
            let start = Instant::now();
            let out = T::select(input, k, order, cfg, policy, &instr)?;
            times.push(start.elapsed());
            last = Some((out, instr.snapshot()));
        }
        let (out, snap) = last.expect("at least one repeat");
        fill(row, &mut times, &snap);
        row.checksum = Some(checksum(&out.result));
        if engine.verify {
            row.verified = Some(match out.scale {
                Some(d) => {
                    oracle_topk(&T::shifted(input, d.value), k, order)?.indices
                        == out.result.indices
                }
                None => same_result(&out.result, &oracle_topk(input, k, order)?),
            });
        }
    } else {
        if policy.mode != ScaleMode::Off {
            bail!("scaling applies to single-task runs");
        }
        let ks = tasks
            .iter()
            .map(|t| parse_rank(k_token, t.len()))
            .collect::<Result<Vec<_>>>()?;
        let batch = BatchInput::from_tasks(tasks.to_vec(), ks.clone())?;
        let mut last = None;
        for _ in 0..repeats {
            let instr = Instrumentation::new(cfg.grid_size);
            let start = Instant::now();
            let out = batch_topk(&batch, order, cfg, engine.batch_options(), &instr)?;
            times.push(start.elapsed());
            last = Some((out, instr.snapshot()));
        }
        let (out, snap) = last.expect("at least one repeat");
        fill(row, &mut times, &snap);
        row.checksum = Some(batch_checksum(&out.results));
        if engine.verify {
            let mut ok = true;
            for (i, r) in out.results.iter().enumerate() {
                ok &= same_result(r, &oracle_topk(batch.task(i), ks[i], order)?);
            }
            row.verified = Some(ok);
        }
    }
    Ok(())
}

fn bench_typed<T: CliValue>(args: &BenchArgs, dtype: &'static str) -> Result<Vec<BenchRow>> {
    let cfg = args.engine.config(T::DTYPE)?;
    let mut rows = Vec::new();
    for dist_name in &args.dist {
        let dist = bench_distribution(dist_name, T::DTYPE)?;
        for &n in &args.n {
            for &b in &args.batch {
                let base = BenchRow {
                    dist: dist_name.clone(),
                    dtype,
                    n,
                    batch: b,
                    repeats: args.repeats.max(1),
                    ..Default::default()
                };
                let tasks: Result<Vec<Vec<T>>> = (0..b)
                    .map(|i| {
                        let seed = args.engine.seed ^ ((n as u64) << 8) ^ i as u64;
                        Ok(generate::<T>(&DistributionSpec::new(dist, n, seed))?)
                    })
                    .collect();
                for k in &args.k {
                    let mut row = BenchRow {
                        k: k.clone(),
                        ..base.clone()
                    };
                    let outcome = match &tasks {
                        Ok(tasks) => bench_cell(args, &cfg, tasks, k, &mut row),
                        Err(e) => Err(anyhow::anyhow!("{e:#}")),
                    };
                    if let Err(e) = outcome {
                        row.error = Some(format!("{e:#}"));
                    }
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let rows = match DType::from(args.dtype) {
        DType::F32 => bench_typed::<f32>(args, "f32")?,
        DType::U32 => bench_typed::<u32>(args, "u32")?,
        DType::F16 => bench_typed::<f16>(args, "f16")?,
    };
    emit(&rows, args.out.as_deref(), args.engine.format)?;
    if rows.iter().any(|r| r.verified == Some(false)) {
        bail!("oracle verification failed");
    }
    Ok(())
}

fn emit<R: Serialize>(
    rows: &[R],
    out: Option<&std::path::Path>,
    format: crate::args::Format,
) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write_rows(&mut w, rows, format)?;
            std::io::Write::flush(&mut w)?;
        }
        None => write_rows(std::io::stdout().lock(), rows, format)?,
    }
    Ok(())
}

/// Hierarchical atomics with the flush-efficient buffer count as one
/// component, since the buffer is what makes the per-worker merge pay off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Variant {
    pub name: &'static str,
    pub hierarchical: bool,
    pub rescheduling: bool,
    pub padding: bool,
}

pub const VARIANTS: [Variant; 8] = [
    Variant {
        name: "baseline",
        hierarchical: false,
        rescheduling: false,
        padding: false,
    },
    Variant {
        name: "only-1",
        hierarchical: true,
        rescheduling: false,
        padding: false,
    },
    Variant {
        name: "only-2",
        hierarchical: false,
        rescheduling: true,
        padding: false,
    },
    Variant {
        name: "only-3",
        hierarchical: false,
        rescheduling: false,
        padding: true,
    },
    Variant {
        name: "except-1",
        hierarchical: false,
        rescheduling: true,
        padding: true,
    },
    Variant {
        name: "except-2",
        hierarchical: true,
        rescheduling: false,
        padding: true,
    },
    Variant {
        name: "except-3",
        hierarchical: true,
        rescheduling: true,
        padding: false,
    },
    Variant {
        name: "full",
        hierarchical: true,
        rescheduling: true,
        padding: true,
    },
];

#[derive(Clone, Debug, Serialize)]
pub struct AblationRow {
    pub variant: &'static str,
    pub hierarchical: bool,
    pub rescheduling: bool,
    pub padding: bool,
    pub median_ms: f64,
    pub total_flushes: u64,
    pub global_merges: u64,
    pub modeled_transactions: u64,
    pub dispatch_rounds: u64,
    pub checksum: String,
    pub verified: Option<bool>,
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<()> {
    if args.batch == 0 || args.n < 2 {
        bail!("ablation needs at least one task of length 2 or more");
    }
    let engine = &args.engine;
    let order = engine.order();
    let base = engine.config(DType::F32)?;
    let lengths: Vec<usize> = (0..args.batch)
        .map(|i| if i == 0 { args.n - 1 } else { args.n })
        .collect();
    let total = lengths.iter().sum();
    let data: Vec<f32> = generate(&DistributionSpec::new(
        Distribution::Uniform {
            low: 0.0,
            high: 1.0,
        },
        total,
        engine.seed,
    ))?;
    let batch = BatchInput::contiguous(data, lengths, vec![args.k; args.batch])?;
    let oracle = if engine.verify {
        Some(
            (0..args.batch)
                .map(|i| oracle_topk(batch.task(i), args.k, order))
                .collect::<Result<Vec<_>, _>>()?,
        )
    } else {
        None
    };

    let mut rows = Vec::new();
    for v in VARIANTS {
        let cfg = if v.hierarchical {
            base.clone()
                .with_atomics(AtomicsMode::Hierarchical)
                .with_buffer_policy(BufferPolicy::FlushEfficient)
        } else {
            base.clone()
                .with_atomics(AtomicsMode::Global)
                .with_buffer_policy(BufferPolicy::Naive)
        };
        let opts = BatchOptions {
            rescheduling: v.rescheduling,
            padding: v.padding,
        };
        let mut times = Vec::new();
        let mut last = None;
        for _ in 0..args.repeats.max(1) {
            let instr = Instrumentation::new(cfg.grid_size);
            let start = Instant::now();
            let out = batch_topk(&batch, order, &cfg, opts, &instr)?;
            times.push(start.elapsed());
            last = Some((out, instr.snapshot()));
        }
        let (out, snap) = last.expect("at least one repeat");
        rows.push(AblationRow {
            variant: v.name,
            hierarchical: v.hierarchical,
            rescheduling: v.rescheduling,
            padding: v.padding,
            median_ms: median(&mut times),
            total_flushes: snap.total_flushes(),
            global_merges: snap.global_merges,
            modeled_transactions: snap.modeled_transactions,
            dispatch_rounds: snap.dispatch_rounds,
            checksum: batch_checksum(&out.results),
            verified: oracle
                .as_ref()
                .map(|o| o.iter().zip(&out.results).all(|(a, b)| same_result(a, b))),
        });
    }
    emit(&rows, args.out.as_deref(), engine.format)?;
    if rows.iter().any(|r| r.verified == Some(false)) {
        bail!("oracle verification failed");
    }
    Ok(())
}
