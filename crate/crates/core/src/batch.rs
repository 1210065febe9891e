//! Batched top-k over one concatenated input.
//!
//! With rescheduling, every task's first pass runs alone on the full worker
//! grid; the remaining passes of all tasks then run level by level, with
//! workers claiming `(task, partition)` pairs from one shared queue.

use serde::Serialize;

use crate::engine::gather::{select_candidates_batched, GatherTask};
use crate::engine::histogram::{count_bins_batched, select_bin, CountTask};
use crate::engine::{
    filter, run_task, validate_input, EngineConfig, Instrumentation, SelectionState, TopKResult,
};
use crate::error::{Result, TopKError};
use crate::keycodec::{encode_all, SelectionOrder};
use crate::memory::{task_transactions, transaction_count};
use crate::value::RadixValue;

#[derive(Clone, Debug, PartialEq)]
pub struct BatchInput<T> {
    data: Vec<T>,
    offsets: Vec<usize>,
    lengths: Vec<usize>,
    ks: Vec<usize>,
}

impl<T: RadixValue> BatchInput<T> {
    pub fn new(
        data: Vec<T>,
        offsets: Vec<usize>,
        lengths: Vec<usize>,
        ks: Vec<usize>,
    ) -> Result<Self> {
        let b = offsets.len();
        if b == 0 {
            return Err(TopKError::InvalidBatch("batch has no tasks".into()));
        }
        if lengths.len() != b || ks.len() != b {
            return Err(TopKError::InvalidBatch(format!(
                "{b} offsets, {} lengths, {} ranks",
                lengths.len(),
                ks.len()
            )));
        }
        for i in 0..b {
            let end = offsets[i] + lengths[i];
            let limit = offsets.get(i + 1).copied().unwrap_or(data.len());
            if end > limit {
                return Err(TopKError::InvalidBatch(format!(
                    "task {i} ends at {end}, past {limit}"
                )));
            }
            if ks[i] == 0 || ks[i] > lengths[i] {
                return Err(TopKError::RankOutOfRange {
                    k: ks[i],
                    n: lengths[i],
                }
                .in_task(i));
            }
        }
        Ok(BatchInput {
            data,
            offsets,
            lengths,
            ks,
        })
    }

    /// Back-to-back tasks with the given lengths.
    pub fn contiguous(data: Vec<T>, lengths: Vec<usize>, ks: Vec<usize>) -> Result<Self> {
        let offsets = lengths
            .iter()
            .scan(0usize, |acc, &l| {
                let o = *acc;
                *acc += l;
                Some(o)
            })
            .collect();
        Self::new(data, offsets, lengths, ks)
    }

    pub fn from_tasks(tasks: Vec<Vec<T>>, ks: Vec<usize>) -> Result<Self> {
        let lengths = tasks.iter().map(Vec::len).collect();
        Self::contiguous(tasks.into_iter().flatten().collect(), lengths, ks)
    }

    pub fn task_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn task(&self, i: usize) -> &[T] {
        &self.data[self.offsets[i]..self.offsets[i] + self.lengths[i]]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn ks(&self) -> &[usize] {
        &self.ks
    }

    /// Modeled transactions to load every task once.
    pub fn transaction_count(&self, pack_size: usize, padding: bool) -> u64 {
        transaction_count(
            &self.offsets,
            &self.lengths,
            T::elem_bytes(),
            pack_size,
            padding,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BatchOptions {
    pub rescheduling: bool,
    pub padding: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            rescheduling: true,
            padding: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ScheduleStats {
    /// Elements scanned by every task's first histogram pass.
    pub phase_a_scanned: u64,
    /// Elements scanned by each later level, summed over tasks.
    pub level_scanned: Vec<u64>,
    /// Kernel-launch analogue for the passes after the first.
    pub dispatch_rounds: u64,
    pub passes_per_task: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchOutput<T> {
    pub results: Vec<TopKResult<T>>,
    pub schedule: ScheduleStats,
}

pub fn batch_topk<T: RadixValue>(
    batch: &BatchInput<T>,
    order: SelectionOrder,
    cfg: &EngineConfig,
    opts: BatchOptions,
    instr: &Instrumentation,
) -> Result<BatchOutput<T>> {
    cfg.validate(T::elem_bytes())?;
    for i in 0..batch.task_count() {
        validate_input(batch.task(i), batch.ks[i]).map_err(|e| e.in_task(i))?;
    }
    if opts.rescheduling {
        rescheduled(batch, order, cfg, opts.padding, instr)
    } else {
        sequential(batch, order, cfg, opts.padding, instr)
    }
}

fn sequential<T: RadixValue>(
    batch: &BatchInput<T>,
    order: SelectionOrder,
    cfg: &EngineConfig,
    padding: bool,
    instr: &Instrumentation,
) -> Result<BatchOutput<T>> {
    let mut results = Vec::with_capacity(batch.task_count());
    let mut stats = ScheduleStats::default();
    for i in 0..batch.task_count() {
        let before = instr.snapshot();
        let r = run_task(
            batch.task(i),
            batch.offsets[i],
            padding,
            batch.ks[i],
            order,
            cfg,
            instr,
        )
        .map_err(|e| e.in_task(i))?;
        let after = instr.snapshot();
        let passes = after.passes - before.passes;
        if passes > 0 {
            stats.phase_a_scanned += batch.lengths[i] as u64;
        }
        for _ in 1..passes {
            instr.add_dispatch_round();
        }
        stats.dispatch_rounds += passes.saturating_sub(1);
        stats.passes_per_task.push(passes);
        results.push(r);
    }
    Ok(BatchOutput {
        results,
        schedule: stats,
    })
}

fn rescheduled<T: RadixValue>(
    batch: &BatchInput<T>,
    order: SelectionOrder,
    cfg: &EngineConfig,
    padding: bool,
    instr: &Instrumentation,
) -> Result<BatchOutput<T>> {
    let b = batch.task_count();
    let tx = |i: usize| {
        task_transactions(
            batch.offsets[i],
            batch.lengths[i],
            T::elem_bytes(),
            cfg.pack_size,
            padding,
        )
    };
    let mut stats = ScheduleStats {
        passes_per_task: vec![0; b],
        ..Default::default()
    };

    // Phase A: first pass of each task, one at a time at full width.
    let mut states: Vec<SelectionState<'static>> = Vec::with_capacity(b);
    for i in 0..b {
        let keys = encode_all(batch.task(i), order);
        let mut st = SelectionState::new(&keys, batch.ks[i], T::WIDTH, cfg.digit_bits)
            .map_err(|e| e.in_task(i))?;
        if st.is_live() {
            st.step(cfg, instr).map_err(|e| e.in_task(i))?;
            stats.phase_a_scanned += batch.lengths[i] as u64;
            stats.passes_per_task[i] = 1;
            instr.add_transactions(2 * tx(i));
        }
        states.push(st.into_owned());
    }

    // Phase B: one dispatch round per level, across all live tasks.
    loop {
        let live: Vec<usize> = (0..b).filter(|&i| states[i].is_live()).collect();
        if live.is_empty() {
            break;
        }
        let windows: Vec<_> = live.iter().map(|&i| states[i].window().unwrap()).collect();
        let count_tasks: Vec<CountTask<'_>> = live
            .iter()
            .zip(&windows)
            .map(|(&i, &window)| CountTask {
                keys: states[i].candidates(),
                window,
            })
            .collect();
        let hists = count_bins_batched(&count_tasks, cfg, instr);
        let mut picks = Vec::with_capacity(live.len());
        for (&i, h) in live.iter().zip(&hists) {
            picks.push(select_bin(h, states[i].k_remaining()).map_err(|e| e.in_task(i))?);
        }
        let gather_tasks: Vec<GatherTask<'_>> = live
            .iter()
            .zip(&windows)
            .zip(picks.iter().zip(&hists))
            .map(|((&i, &window), (&(bin, _), h))| GatherTask {
                keys: states[i].candidates(),
                window,
                bin,
                expected: h.counts()[bin] as usize,
            })
            .collect();
        let survivors = select_candidates_batched(&gather_tasks, cfg, instr)?;

        let level: u64 = live
            .iter()
            .map(|&i| states[i].candidates().len() as u64)
            .sum();
        stats.level_scanned.push(level);
        stats.dispatch_rounds += 1;
        instr.add_dispatch_round();
        for ((&i, window), (kept, (_, k_new))) in live
            .iter()
            .zip(windows)
            .zip(survivors.into_iter().zip(picks))
        {
            states[i].apply(kept, k_new, window);
            stats.passes_per_task[i] += 1;
            instr.add_pass();
        }
    }

    let mut results = Vec::with_capacity(b);
    for (i, st) in states.into_iter().enumerate() {
        let pivot = st.pivot();
        drop(st);
        instr.add_transactions(tx(i));
        results.push(
            filter(batch.task(i), pivot, batch.ks[i], order, cfg, instr)
                .map_err(|e| e.in_task(i))?,
        );
    }
    Ok(BatchOutput {
        results,
        schedule: stats,
    })
}
