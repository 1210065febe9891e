//! Candidate compaction (`select_candidates`): keep the keys whose current
//! digit equals the target bin.

use crate::engine::buffer::{BufferMode, OutputSink, WriteBuffer};
use crate::engine::config::EngineConfig;
use crate::engine::histogram::check_workers;
use crate::engine::instrument::Instrumentation;
use crate::error::Result;
use crate::exec::{run_workers, WorkQueue, WorkSource};
use crate::keycodec::{extract_digit, DigitWindow, RadixKey};

pub(crate) struct GatherTask<'a> {
    pub keys: &'a [RadixKey],
    pub window: DigitWindow,
    pub bin: usize,
    /// Output slots to reserve; the bin count when known.
    pub expected: usize,
}

/// Keys of `candidates` whose digit under `window` equals `bin`, in
/// unspecified order.
pub fn select_candidates(
    candidates: &[RadixKey],
    bin: usize,
    window: DigitWindow,
    cfg: &EngineConfig,
    instr: &Instrumentation,
) -> Result<Vec<RadixKey>> {
    select_candidates_sized(candidates, bin, window, candidates.len(), cfg, instr)
}

pub(crate) fn select_candidates_sized(
    candidates: &[RadixKey],
    bin: usize,
    window: DigitWindow,
    expected: usize,
    cfg: &EngineConfig,
    instr: &Instrumentation,
) -> Result<Vec<RadixKey>> {
    check_workers(cfg, instr)?;
    let source = WorkSource::Strided {
        len: candidates.len(),
        block: cfg.block_size,
        grid: cfg.grid_size,
    };
    let task = GatherTask {
        keys: candidates,
        window,
        bin,
        expected,
    };
    Ok(gather(std::slice::from_ref(&task), &source, cfg, instr)?
        .pop()
        .unwrap())
}

pub(crate) fn select_candidates_batched(
    tasks: &[GatherTask<'_>],
    cfg: &EngineConfig,
    instr: &Instrumentation,
) -> Result<Vec<Vec<RadixKey>>> {
    let queue = WorkQueue::new(tasks.iter().map(|t| t.keys.len()), cfg.block_size);
    gather(tasks, &WorkSource::Queue(&queue), cfg, instr)
}

fn gather(
    tasks: &[GatherTask<'_>],
    source: &WorkSource<'_>,
    cfg: &EngineConfig,
    instr: &Instrumentation,
) -> Result<Vec<Vec<RadixKey>>> {
    let mode = BufferMode::for_gather(cfg);
    let sinks: Vec<OutputSink> = tasks.iter().map(|t| OutputSink::new(t.expected)).collect();

    let outcomes = run_workers(cfg.grid_size, |worker| -> Result<()> {
        let mut buffers: Vec<Option<WriteBuffer>> = (0..tasks.len()).map(|_| None).collect();
        let mut partitions = 0u64;
        let mut status = Ok(());
        source.for_each(worker, |item| {
            if status.is_err() {
                return;
            }
            let task = &tasks[item.task];
            let sink = &sinks[item.task];
            let buf = buffers[item.task].get_or_insert_with(|| WriteBuffer::new(mode));
            partitions += 1;
            status = (|| {
                for &key in &task.keys[item.range.clone()] {
                    if extract_digit(key, task.window) == task.bin {
                        buf.push(sink, key.0 as u64)?;
                    }
                }
                buf.end_partition(sink)
            })();
        });
        let (mut flushes, mut drains) = (0, 0);
        for (t, buf) in buffers.iter_mut().enumerate() {
            if let Some(buf) = buf {
                if status.is_ok() {
                    status = buf.finish(&sinks[t]);
                }
                flushes += buf.flushes;
                drains += buf.drains;
            }
        }
        instr.add_flushes(worker, flushes, drains);
        instr.add_write_partitions(partitions);
        status
    });
    outcomes.into_iter().collect::<Result<()>>()?;

    Ok(sinks
        .into_iter()
        .map(|s| {
            s.into_vec()
                .into_iter()
                .map(|v| RadixKey(v as u32))
                .collect()
        })
        .collect())
}
