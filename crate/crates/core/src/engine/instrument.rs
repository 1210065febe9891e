use std::sync::atomic::{AtomicU64, Ordering::Relaxed};

use serde::{Deserialize, Serialize};

/// Shared work counters for one engine run.
///
/// Workers accumulate locally and publish with a single atomic add, so the
/// counters themselves never become a contention point.
#[derive(Debug, Default)]
pub struct Instrumentation {
    flushes_per_worker: Vec<AtomicU64>,
    drains_per_worker: Vec<AtomicU64>,
    write_partitions: AtomicU64,
    global_merges: AtomicU64,
    elements_scanned: AtomicU64,
    filter_scanned: AtomicU64,
    modeled_transactions: AtomicU64,
    passes: AtomicU64,
    dispatch_rounds: AtomicU64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstrumentationSnapshot {
    pub flushes_per_worker: Vec<u64>,
    /// End-of-kernel drain flushes, a subset of `flushes_per_worker`.
    pub drains_per_worker: Vec<u64>,
    /// Partitions processed by the buffered write kernels.
    pub write_partitions: u64,
    pub global_merges: u64,
    /// Elements read by histogram passes (radix select work).
    pub elements_scanned: u64,
    /// Elements read by the filter phase.
    pub filter_scanned: u64,
    pub modeled_transactions: u64,
    pub passes: u64,
    pub dispatch_rounds: u64,
}

impl InstrumentationSnapshot {
    pub fn total_flushes(&self) -> u64 {
        self.flushes_per_worker.iter().sum()
    }
}

impl Instrumentation {
    pub fn new(workers: usize) -> Self {
        Instrumentation {
            flushes_per_worker: (0..workers).map(|_| AtomicU64::new(0)).collect(),
            drains_per_worker: (0..workers).map(|_| AtomicU64::new(0)).collect(),
            ..Default::default()
        }
    }

    pub fn workers(&self) -> usize {
        self.flushes_per_worker.len()
    }

    /// Zero every counter and resize the per-worker arrays.
    pub fn reset(&mut self, workers: usize) {
        *self = Instrumentation::new(workers);
    }

    pub fn snapshot(&self) -> InstrumentationSnapshot {
        let load = |v: &Vec<AtomicU64>| v.iter().map(|c| c.load(Relaxed)).collect();
        InstrumentationSnapshot {
            flushes_per_worker: load(&self.flushes_per_worker),
            drains_per_worker: load(&self.drains_per_worker),
            write_partitions: self.write_partitions.load(Relaxed),
            global_merges: self.global_merges.load(Relaxed),
            elements_scanned: self.elements_scanned.load(Relaxed),
            filter_scanned: self.filter_scanned.load(Relaxed),
            modeled_transactions: self.modeled_transactions.load(Relaxed),
            passes: self.passes.load(Relaxed),
            dispatch_rounds: self.dispatch_rounds.load(Relaxed),
        }
    }

    pub(crate) fn add_flushes(&self, worker: usize, flushes: u64, drains: u64) {
        self.flushes_per_worker[worker].fetch_add(flushes, Relaxed);
        self.drains_per_worker[worker].fetch_add(drains, Relaxed);
    }

    pub(crate) fn add_write_partitions(&self, n: u64) {
        self.write_partitions.fetch_add(n, Relaxed);
    }

    pub(crate) fn add_global_merges(&self, n: u64) {
        self.global_merges.fetch_add(n, Relaxed);
    }

    pub(crate) fn add_scanned(&self, n: u64) {
        self.elements_scanned.fetch_add(n, Relaxed);
    }

    pub(crate) fn add_filter_scanned(&self, n: u64) {
        self.filter_scanned.fetch_add(n, Relaxed);
    }

    pub(crate) fn add_transactions(&self, n: u64) {
        self.modeled_transactions.fetch_add(n, Relaxed);
    }

    pub(crate) fn add_pass(&self) {
        self.passes.fetch_add(1, Relaxed);
    }

    pub(crate) fn add_dispatch_round(&self) {
        self.dispatch_rounds.fetch_add(1, Relaxed);
    }
}
