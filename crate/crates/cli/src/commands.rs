use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use radix_topk::{
    batch_topk, f16, generate, oracle_topk, read_batch, read_dataset, write_batch, write_dataset,
    BatchInput, DType, Dataset, Distribution, DistributionSpec, Instrumentation,
    InstrumentationSnapshot, RadixValue, ScaleMode, TopKResult,
};
use serde::Serialize;
use serde_json::Value;

use crate::args::{parse_rank, DistKind, EngineArgs, GenArgs, TopkArgs};
use crate::report::{
    add_snapshot, checksum, same_result, write_report, ConfigEcho, RunReport, TaskDigest,
};
use crate::value::CliValue;

pub fn distribution(kind: DistKind, params: &[f64], s: Option<f64>) -> Result<Distribution> {
    let p = |i: usize, default: f64| params.get(i).copied().unwrap_or(default);
    let max = match kind {
        DistKind::Uniform | DistKind::Normal => 2,
        DistKind::Zipf => 1,
        DistKind::Peaked => 4,
    };
    ensure!(
        params.len() <= max,
        "{kind:?} takes at most {max} parameters"
    );
    Ok(match kind {
        DistKind::Uniform => Distribution::Uniform {
            low: p(0, 0.0),
            high: p(1, 1.0),
        },
        DistKind::Normal => Distribution::Normal {
            mean: p(0, 0.0),
            std_dev: p(1, 1.0),
        },
        DistKind::Zipf => Distribution::Zipf {
            s: s.unwrap_or(p(0, 1.1)),
        },
        DistKind::Peaked => {
            let modes = p(1, 1.0);
            ensure!(
                modes >= 1.0 && modes.fract() == 0.0,
                "peak count {modes} is not a positive integer"
            );
            Distribution::Peaked {
                mass: p(0, 0.9),
                modes: modes as usize,
                low: p(2, 0.0),
                high: p(3, 1e-3),
            }
        }
    })
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

pub fn cmd_gen(args: &GenArgs) -> Result<()> {
    let dist = distribution(args.dist, &args.params, args.s)?;
    match DType::from(args.dtype) {
        DType::F32 => gen_typed::<f32>(args, dist),
        DType::U32 => gen_typed::<u32>(args, dist),
        DType::F16 => gen_typed::<f16>(args, dist),
    }
}

fn gen_typed<T: RadixValue>(args: &GenArgs, dist: Distribution) -> Result<()> {
    let mut out = create(&args.out)?;
    match &args.lengths {
        Some(lengths) => {
            ensure!(!lengths.is_empty(), "no task lengths");
            let tasks = lengths
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    generate::<T>(&DistributionSpec::new(
                        dist,
                        n,
                        args.seed.wrapping_add(i as u64),
                    ))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let views: Vec<&[T]> = tasks.iter().map(Vec::as_slice).collect();
            write_batch(&mut out, &views)?;
        }
        None => {
            let n = args.n.expect("clap requires --n without --lengths");
            let values = generate::<T>(&DistributionSpec::new(dist, n, args.seed))?;
            write_dataset(&mut out, &values)?;
        }
    }
    out.flush()?;
    Ok(())
}

enum Loaded {
    F32(Vec<Vec<f32>>),
    U32(Vec<Vec<u32>>),
    F16(Vec<Vec<f16>>),
}

fn load_inputs(args: &TopkArgs) -> Result<Loaded> {
    let open = |p: &Path| -> Result<BufReader<File>> {
        Ok(BufReader::new(
            File::open(p).with_context(|| format!("cannot open {}", p.display()))?,
        ))
    };
    let mut magic = [0u8; 4];
    {
        use std::io::Read;
        open(&args.inputs[0])?
            .read_exact(&mut magic)
            .with_context(|| format!("{} is too short", args.inputs[0].display()))?;
    }
    if &magic == radix_topk::dataset::BATCH_MAGIC {
        ensure!(
            args.inputs.len() == 1,
            "a batch container must be the only input"
        );
        let path = &args.inputs[0];
        let ctx = || format!("reading {}", path.display());
        fn split<T: Clone>(data: Vec<T>, lengths: &[usize]) -> Vec<Vec<T>> {
            let mut at = 0;
            lengths
                .iter()
                .map(|&l| {
                    at += l;
                    data[at - l..at].to_vec()
                })
                .collect()
        }
        return Ok(match DType::from(args.dtype) {
            DType::F32 => {
                let (d, l) = read_batch::<f32, _>(&mut open(path)?).with_context(ctx)?;
                Loaded::F32(split(d, &l))
            }
            DType::U32 => {
                let (d, l) = read_batch::<u32, _>(&mut open(path)?).with_context(ctx)?;
                Loaded::U32(split(d, &l))
            }
            DType::F16 => {
                let (d, l) = read_batch::<f16, _>(&mut open(path)?).with_context(ctx)?;
                Loaded::F16(split(d, &l))
            }
        });
    }
    let mut sets = Vec::new();
    for p in &args.inputs {
        sets.push(read_dataset(&mut open(p)?).with_context(|| format!("reading {}", p.display()))?);
    }
    let dtype = sets[0].dtype();
    ensure!(
        sets.iter().all(|s| s.dtype() == dtype),
        "inputs mix element types"
    );
    Ok(match dtype {
        DType::F32 => Loaded::F32(
            sets.into_iter()
                .map(|s| match s {
                    Dataset::F32(v) => v,
                    _ => unreachable!(),
                })
                .collect(),
        ),
        DType::U32 => Loaded::U32(
            sets.into_iter()
                .map(|s| match s {
                    Dataset::U32(v) => v,
                    _ => unreachable!(),
                })
                .collect(),
        ),
        DType::F16 => Loaded::F16(
            sets.into_iter()
                .map(|s| match s {
                    Dataset::F16(v) => v,
                    _ => unreachable!(),
                })
                .collect(),
        ),
    })
}

pub fn cmd_topk(args: &TopkArgs) -> Result<()> {
    let (report, results) = match load_inputs(args)? {
        Loaded::F32(t) => run_typed(args, t)?,
        Loaded::U32(t) => run_typed(args, t)?,
        Loaded::F16(t) => run_typed(args, t)?,
    };
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        serde_json::to_writer(&mut w, &results)?;
        writeln!(w)?;
        w.flush()?;
    }
    match &args.report {
        Some(path) => {
            let mut w = create(path)?;
            write_report(&mut w, &report, args.engine.format)?;
            w.flush()?;
        }
        None => write_report(std::io::stdout().lock(), &report, args.engine.format)?,
    }
    if report.tasks.iter().any(|t| t.verified == Some(false)) {
        bail!("oracle verification failed");
    }
    Ok(())
}

#[derive(Serialize)]
pub struct TaskResult {
    pub task: usize,
    pub n: usize,
    pub k: usize,
    pub indices: Vec<usize>,
    pub values: Vec<Value>,
}

fn result_json<T: CliValue>(task: usize, n: usize, k: usize, r: &TopKResult<T>) -> TaskResult {
    TaskResult {
        task,
        n,
        k,
        indices: r.indices.clone(),
        values: r.values.iter().map(|&v| v.to_json()).collect(),
    }
}

pub fn config_echo<T: RadixValue>(engine: &EngineArgs) -> Result<ConfigEcho> {
    Ok(ConfigEcho {
        dtype: match T::DTYPE {
            DType::F32 => "f32",
            DType::U32 => "u32",
            DType::F16 => "f16",
        },
        order: engine.order(),
        engine: engine.config(T::DTYPE)?,
        batch: engine.batch_options(),
        scale: engine.scale_policy()?,
    })
}

fn resolve_ranks(tokens: &[String], lengths: &[usize]) -> Result<Vec<usize>> {
    if tokens.len() == 1 {
        return lengths.iter().map(|&n| parse_rank(&tokens[0], n)).collect();
    }
    ensure!(
        tokens.len() == lengths.len(),
        "{} ranks for {} tasks",
        tokens.len(),
        lengths.len()
    );
    tokens
        .iter()
        .zip(lengths)
        .map(|(t, &n)| parse_rank(t, n))
        .collect()
}

fn run_typed<T: CliValue>(
    args: &TopkArgs,
    tasks: Vec<Vec<T>>,
) -> Result<(RunReport, Vec<TaskResult>)> {
    let engine = &args.engine;
    let echo = config_echo::<T>(engine)?;
    let cfg = echo.engine.clone();
    let order = echo.order;
    let policy = echo.scale;
    let instr = Instrumentation::new(cfg.grid_size);

    // one dataset with several ranks runs each rank on its own
    let single = tasks.len() == 1;
    let ranks: Vec<usize> = if single {
        args.k
            .iter()
            .map(|t| parse_rank(t, tasks[0].len()))
            .collect::<Result<_>>()?
    } else {
        resolve_ranks(&args.k, &tasks.iter().map(Vec::len).collect::<Vec<_>>())?
    };

    let mut digests = Vec::new();
    let mut results = Vec::new();
    let mut instrumentation = InstrumentationSnapshot::default();
    let mut schedule = None;
    let mut elapsed = std::time::Duration::ZERO;
    if single {
        let input = &tasks[0];
        for (i, &k) in ranks.iter().enumerate() {
            let run = Instrumentation::new(cfg.grid_size);
            let start = Instant::now();
            let out = T::select(input, k, order, &cfg, policy, &run)?;
            elapsed += start.elapsed();
            let snap = run.snapshot();
            let verified = engine.verify.then(|| -> Result<bool> {
                Ok(match out.scale {
                    // selection happened on the shifted values
                    Some(d) => {
                        oracle_topk(&T::shifted(input, d.value), k, order)?.indices
                            == out.result.indices
                    }
                    None => same_result(&out.result, &oracle_topk(input, k, order)?),
                })
            });
            digests.push(TaskDigest {
                task: i,
                n: input.len(),
                k,
                pivot: out.result.pivot.to_json(),
                checksum: checksum(&out.result),
                passes: Some(snap.passes),
                scale_index: out.scale.map(|d| d.index),
                verified: verified.transpose()?,
            });
            add_snapshot(&mut instrumentation, &snap);
            results.push(result_json(i, input.len(), k, &out.result));
        }
    } else {
        ensure!(
            policy.mode == ScaleMode::Off,
            "scaling applies to single-dataset runs"
        );
        let batch = BatchInput::from_tasks(tasks, ranks.clone())?;
        let start = Instant::now();
        let out = batch_topk(&batch, order, &cfg, engine.batch_options(), &instr)?;
        elapsed += start.elapsed();
        for (i, r) in out.results.iter().enumerate() {
            let n = batch.lengths()[i];
            let verified = engine
                .verify
                .then(|| oracle_topk(batch.task(i), ranks[i], order).map(|o| same_result(r, &o)));
            digests.push(TaskDigest {
                task: i,
                n,
                k: ranks[i],
                pivot: r.pivot.to_json(),
                checksum: checksum(r),
                passes: Some(out.schedule.passes_per_task[i]),
                scale_index: None,
                verified: verified.transpose()?,
            });
            results.push(result_json(i, n, ranks[i], r));
        }
        instrumentation = instr.snapshot();
        schedule = Some(out.schedule);
    }
    let elapsed_ms = elapsed.as_secs_f64() * 1e3;
    Ok((
        RunReport {
            config: echo,
            tasks: digests,
            instrumentation,
            schedule,
            elapsed_ms,
        },
        results,
    ))
}
