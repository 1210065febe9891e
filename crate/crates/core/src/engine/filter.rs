//! Phase two: rescan the original input and emit everything on the selected
//! side of the pivot.

use crate::engine::buffer::{BufferMode, OutputSink, WriteBuffer};
use crate::engine::config::EngineConfig;
use crate::engine::histogram::check_workers;
use crate::engine::instrument::Instrumentation;
use crate::engine::select::Pivot;
use crate::engine::TopKResult;
use crate::error::{Result, TopKError};
use crate::exec::{run_workers, WorkSource};
use crate::keycodec::{encode_key, SelectionOrder};
use crate::value::RadixValue;

/// Which pivot-equal elements make the cut.
#[derive(Clone, Copy, Debug)]
enum TieRule {
    All,
    /// Keep equal elements in partitions before `partition`, plus the first
    /// `quota` of them inside `partition`.
    Cutoff {
        partition: usize,
        quota: usize,
    },
}

impl TieRule {
    #[inline]
    fn admits(self, partition: usize, ordinal: usize) -> bool {
        match self {
            TieRule::All => true,
            TieRule::Cutoff {
                partition: p,
                quota,
            } => partition < p || (partition == p && ordinal < quota),
        }
    }
}

/// Emit the top-`k` of `input` given its pivot. Keys strictly above the
/// pivot are all taken; pivot-equal elements fill the remaining slots in
/// ascending index order.
///
/// For `k` up to the configured ceiling each worker stages its whole share
/// in one fixed-capacity buffer and flushes exactly once.
pub fn filter<T: RadixValue>(
    input: &[T],
    pivot: Pivot,
    k: usize,
    order: SelectionOrder,
    cfg: &EngineConfig,
    instr: &Instrumentation,
) -> Result<TopKResult<T>> {
    check_workers(cfg, instr)?;
    if k == 0 || k > input.len() {
        return Err(TopKError::RankOutOfRange { k, n: input.len() });
    }
    if pivot.rank == 0 || pivot.rank > pivot.ties || pivot.rank > k {
        return Err(TopKError::InvariantViolation(format!(
            "pivot rank {} inconsistent with {} ties and k = {k}",
            pivot.rank, pivot.ties
        )));
    }
    let source = WorkSource::Strided {
        len: input.len(),
        block: cfg.block_size,
        grid: cfg.grid_size,
    };
    let rule = if pivot.rank == pivot.ties {
        TieRule::All
    } else {
        tie_cutoff(input, pivot, order, &source, cfg, instr)?
    };

    let mode = BufferMode::for_filter(cfg, k);
    let sink = OutputSink::new(k);
    let outcomes = run_workers(cfg.grid_size, |worker| -> Result<()> {
        let mut buf = WriteBuffer::new(mode);
        let mut partitions = 0u64;
        let mut scanned = 0u64;
        let mut status = Ok(());
        source.for_each(worker, |item| {
            if status.is_err() {
                return;
            }
            partitions += 1;
            scanned += item.range.len() as u64;
            let mut ordinal = 0usize;
            status = (|| {
                for i in item.range.clone() {
                    let key = encode_key(input[i], order);
                    if key > pivot.key {
                        buf.push(&sink, i as u64)?;
                    } else if key == pivot.key {
                        if rule.admits(item.partition, ordinal) {
                            buf.push(&sink, i as u64)?;
                        }
                        ordinal += 1;
                    }
                }
                buf.end_partition(&sink)
            })();
        });
        if status.is_ok() {
            status = buf.finish(&sink);
        }
        instr.add_flushes(worker, buf.flushes, buf.drains);
        instr.add_write_partitions(partitions);
        instr.add_filter_scanned(scanned);
        status
    });
    outcomes
        .into_iter()
        .collect::<Result<()>>()
        .map_err(|e| match e {
            TopKError::InvariantViolation(msg) => TopKError::InvariantViolation(format!(
                "more than {k} elements on the selected side of the pivot ({msg})"
            )),
            other => other,
        })?;

    if sink.written() != k {
        return Err(TopKError::InvariantViolation(format!(
            "filter produced {} of {k} elements",
            sink.written()
        )));
    }
    let indices: Vec<usize> = sink.into_vec().into_iter().map(|i| i as usize).collect();
    let mut result = TopKResult {
        values: indices.iter().map(|&i| input[i]).collect(),
        indices,
        pivot: crate::keycodec::decode_key(pivot.key, order),
    };
    result.normalize(order);
    Ok(result)
}

/// Count pivot-equal elements per partition and locate where the
/// `pivot.rank`-th one (by index) falls.
fn tie_cutoff<T: RadixValue>(
    input: &[T],
    pivot: Pivot,
    order: SelectionOrder,
    source: &WorkSource<'_>,
    cfg: &EngineConfig,
    instr: &Instrumentation,
) -> Result<TieRule> {
    let partitions = input.len().div_ceil(cfg.block_size);
    let per_worker = run_workers(cfg.grid_size, |worker| {
        let mut counts = Vec::new();
        let mut scanned = 0u64;
        source.for_each(worker, |item| {
            let c = input[item.range.clone()]
                .iter()
                .filter(|&&v| encode_key(v, order) == pivot.key)
                .count();
            scanned += item.range.len() as u64;
            counts.push((item.partition, c));
        });
        instr.add_filter_scanned(scanned);
        counts
    });
    let mut equal = vec![0usize; partitions];
    for (p, c) in per_worker.into_iter().flatten() {
        equal[p] = c;
    }
    let mut before = 0usize;
    for (p, &c) in equal.iter().enumerate() {
        if before + c >= pivot.rank {
            return Ok(TieRule::Cutoff {
                partition: p,
                quota: pivot.rank - before,
            });
        }
        before += c;
    }
    Err(TopKError::InvariantViolation(format!(
        "only {before} elements equal the pivot, rank {} requested",
        pivot.rank
    )))
}
