//! Histogram pass (`count_bins`) and target-bin selection (`select_bin`).

use std::sync::atomic::{AtomicU64, Ordering::Relaxed};

use crate::engine::config::{AtomicsMode, EngineConfig};
use crate::engine::instrument::Instrumentation;
use crate::error::{Result, TopKError};
use crate::exec::{run_workers, WorkQueue, WorkSource};
use crate::keycodec::{extract_digit, DigitWindow, RadixKey};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
}

impl Histogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        Histogram { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn nonzero_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// One task's input to a multi-task histogram pass.
pub(crate) struct CountTask<'a> {
    pub keys: &'a [RadixKey],
    pub window: DigitWindow,
}

/// Count digit occurrences over `candidates` for `window`.
///
/// Every worker accumulates a private histogram over its partitions and merges
/// it into the shared one once.
pub fn count_bins(
    candidates: &[RadixKey],
    window: DigitWindow,
    cfg: &EngineConfig,
    instr: &Instrumentation,
) -> Result<Histogram> {
    check_workers(cfg, instr)?;
    let source = WorkSource::Strided {
        len: candidates.len(),
        block: cfg.block_size,
        grid: cfg.grid_size,
    };
    let task = CountTask {
        keys: candidates,
        window,
    };
    Ok(
        count_tasks(std::slice::from_ref(&task), &source, cfg, instr)
            .pop()
            .unwrap(),
    )
}

/// Histogram pass over several tasks sharing one worker grid.
pub(crate) fn count_bins_batched(
    tasks: &[CountTask<'_>],
    cfg: &EngineConfig,
    instr: &Instrumentation,
) -> Vec<Histogram> {
    let queue = WorkQueue::new(tasks.iter().map(|t| t.keys.len()), cfg.block_size);
    count_tasks(tasks, &WorkSource::Queue(&queue), cfg, instr)
}

fn count_tasks(
    tasks: &[CountTask<'_>],
    source: &WorkSource<'_>,
    cfg: &EngineConfig,
    instr: &Instrumentation,
) -> Vec<Histogram> {
    let radix = cfg.radix();
    let shared: Vec<Vec<AtomicU64>> = tasks
        .iter()
        .map(|_| (0..radix).map(|_| AtomicU64::new(0)).collect())
        .collect();
    let strided = matches!(source, WorkSource::Strided { .. });

    run_workers(cfg.grid_size, |worker| {
        let mut scanned = 0u64;
        let mut merges = 0u64;
        match cfg.atomics {
            AtomicsMode::Hierarchical => {
                let mut local: Vec<Option<Vec<u64>>> = vec![None; tasks.len()];
                if strided {
                    // every block runs its merge loop, even with no partitions
                    local[0] = Some(vec![0; radix]);
                }
                source.for_each(worker, |item| {
                    let task = &tasks[item.task];
                    let hist = local[item.task].get_or_insert_with(|| vec![0; radix]);
                    for &key in &task.keys[item.range.clone()] {
                        hist[extract_digit(key, task.window)] += 1;
                    }
                    scanned += item.range.len() as u64;
                });
                for (t, hist) in local.into_iter().enumerate() {
                    let Some(hist) = hist else { continue };
                    for (bin, &c) in hist.iter().enumerate() {
                        if c > 0 {
                            shared[t][bin].fetch_add(c, Relaxed);
                        }
                    }
                    merges += 1;
                }
            }
            AtomicsMode::Global => {
                source.for_each(worker, |item| {
                    let task = &tasks[item.task];
                    for &key in &task.keys[item.range.clone()] {
                        shared[item.task][extract_digit(key, task.window)].fetch_add(1, Relaxed);
                    }
                    scanned += item.range.len() as u64;
                    merges += item.range.len() as u64;
                });
            }
        }
        instr.add_scanned(scanned);
        instr.add_global_merges(merges);
    });

    shared
        .into_iter()
        .map(|bins| Histogram::from_counts(bins.into_iter().map(AtomicU64::into_inner).collect()))
        .collect()
}

/// Find the bin holding the `k`-th largest key and the rank of that key
/// within the bin.
///
/// Bins are scanned from the highest digit down; the result is the first bin
/// where the running count reaches `k`.
pub fn select_bin(histogram: &Histogram, k: usize) -> Result<(usize, usize)> {
    let total = histogram.total();
    if k == 0 || k as u64 > total {
        return Err(TopKError::RankOutOfRange {
            k,
            n: total as usize,
        });
    }
    let k = k as u64;
    let mut above = 0u64;
    for (bin, &c) in histogram.counts.iter().enumerate().rev() {
        if above + c >= k {
            return Ok((bin, (k - above) as usize));
        }
        above += c;
    }
    unreachable!("k <= total guarantees a bin")
}

pub(crate) fn check_workers(cfg: &EngineConfig, instr: &Instrumentation) -> Result<()> {
    if instr.workers() < cfg.grid_size {
        return Err(TopKError::InvalidConfig(format!(
            "instrumentation sized for {} workers, grid has {}",
            instr.workers(),
            cfg.grid_size
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn cfg(block: usize, grid: usize, d: u32) -> EngineConfig {
        EngineConfig::default()
            .with_block_size(block)
            .with_grid_size(grid)
            .with_digit_bits(d)
    }

    #[test]
    fn toy_keys_split_evenly() {
        let keys: Vec<RadixKey> = (0..16).map(RadixKey).collect();
        let c = cfg(2, 3, 2);
        let instr = Instrumentation::new(3);
        let h = count_bins(&keys, DigitWindow::first(4, 2), &c, &instr).unwrap();
        assert_eq!(h.counts(), &[4, 4, 4, 4]);
        assert_eq!(instr.snapshot().global_merges, 3);
        assert_eq!(instr.snapshot().elements_scanned, 16);
    }

    #[test]
    fn identical_keys_fill_one_bin() {
        let keys = vec![RadixKey(0xABCD_EF01); 1000];
        let instr = Instrumentation::new(4);
        let h = count_bins(&keys, DigitWindow::first(32, 12), &cfg(64, 4, 12), &instr).unwrap();
        assert_eq!(h.nonzero_bins(), 1);
        assert_eq!(h.counts()[0xABC], 1000);
    }

    #[test]
    fn matches_scalar_reference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let keys: Vec<RadixKey> = (0..10_000).map(|_| RadixKey(rng.random())).collect();
        for window in DigitWindow::sequence(32, 12) {
            let mut reference = vec![0u64; 4096];
            for &k in &keys {
                reference[((k.0 >> window.low()) & ((1 << window.span()) - 1)) as usize] += 1;
            }
            for atomics in [AtomicsMode::Hierarchical, AtomicsMode::Global] {
                let c = cfg(256, 5, 12).with_atomics(atomics);
                let instr = Instrumentation::new(5);
                let h = count_bins(&keys, window, &c, &instr).unwrap();
                assert_eq!(h.counts(), reference.as_slice());
            }
        }
    }

    #[test]
    fn global_mode_counts_per_element_merges() {
        let keys: Vec<RadixKey> = (0..100).map(RadixKey).collect();
        let c = cfg(16, 2, 4).with_atomics(AtomicsMode::Global);
        let instr = Instrumentation::new(2);
        count_bins(&keys, DigitWindow::first(32, 4), &c, &instr).unwrap();
        assert_eq!(instr.snapshot().global_merges, 100);
    }

    #[test]
    fn select_bin_examples() {
        let h = Histogram::from_counts(vec![5, 3, 2, 6]);
        assert_eq!(select_bin(&h, 7).unwrap(), (2, 1));
        assert_eq!(select_bin(&h, 6).unwrap(), (3, 6));
        assert_eq!(select_bin(&h, 16).unwrap(), (0, 5));
        let top = Histogram::from_counts(vec![0, 0, 0, 9]);
        assert_eq!(select_bin(&top, 1).unwrap(), (3, 1));
        let bottom = Histogram::from_counts(vec![9, 0, 0, 0]);
        assert_eq!(select_bin(&bottom, 9).unwrap(), (0, 9));
    }

    #[test]
    fn select_bin_rejects_bad_rank() {
        let h = Histogram::from_counts(vec![1, 1]);
        assert!(matches!(
            select_bin(&h, 3),
            Err(TopKError::RankOutOfRange { k: 3, n: 2 })
        ));
        assert!(select_bin(&h, 0).is_err());
    }

    #[test]
    fn undersized_instrumentation_is_rejected() {
        let keys = vec![RadixKey(1); 4];
        let instr = Instrumentation::new(1);
        assert!(count_bins(&keys, DigitWindow::first(32, 8), &cfg(2, 2, 8), &instr).is_err());
    }
}
