//! Single-task radix top-k: histogram passes to isolate the pivot, then one
//! filter pass over the original input.

mod buffer;
pub mod config;
pub mod filter;
pub mod gather;
pub mod histogram;
pub mod instrument;
pub mod select;

use serde::Serialize;

use crate::error::{Result, TopKError};
use crate::keycodec::{encode_all, encode_key, SelectionOrder};
use crate::memory::task_transactions;
use crate::value::{find_nan, RadixValue};

pub use config::{AtomicsMode, BufferPolicy, EngineConfig};
pub use filter::filter;
pub use gather::select_candidates;
pub use histogram::{count_bins, select_bin, Histogram};
pub use instrument::{Instrumentation, InstrumentationSnapshot};
pub use select::{radix_select, PassOutcome, Pivot, SelectionState};

/// Number of full scans of the original input per task: the first histogram
/// pass, the first compaction and the filter.
pub(crate) const INPUT_SCANS: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopKResult<T> {
    pub values: Vec<T>,
    /// Zero-based positions into the input.
    pub indices: Vec<usize>,
    /// Value of the `k`-th selected element.
    pub pivot: T,
}

impl<T: RadixValue> TopKResult<T> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Sort best-first, ties by ascending index.
    pub fn normalize(&mut self, order: SelectionOrder) {
        let mut pairs: Vec<(u32, usize, T)> = self
            .indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (encode_key(v, order).0, i, v))
            .collect();
        pairs.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        self.indices = pairs.iter().map(|p| p.1).collect();
        self.values = pairs.iter().map(|p| p.2).collect();
    }
}

pub(crate) fn validate_input<T: RadixValue>(input: &[T], k: usize) -> Result<()> {
    if input.is_empty() {
        return Err(TopKError::EmptyInput);
    }
    if k == 0 || k > input.len() {
        return Err(TopKError::RankOutOfRange { k, n: input.len() });
    }
    if let Some(index) = find_nan(input) {
        return Err(TopKError::NanInput { index });
    }
    Ok(())
}

/// Top-`k` of `input` with a fresh instrumentation record.
pub fn topk<T: RadixValue>(
    input: &[T],
    k: usize,
    order: SelectionOrder,
    cfg: &EngineConfig,
) -> Result<TopKResult<T>> {
    let instr = Instrumentation::new(cfg.grid_size);
    topk_instrumented(input, k, order, cfg, &instr)
}

pub fn topk_instrumented<T: RadixValue>(
    input: &[T],
    k: usize,
    order: SelectionOrder,
    cfg: &EngineConfig,
    instr: &Instrumentation,
) -> Result<TopKResult<T>> {
    run_task(input, 0, false, k, order, cfg, instr)
}

/// One task located at element `offset` of a larger array (only used for the
/// transaction model).
pub(crate) fn run_task<T: RadixValue>(
    input: &[T],
    offset: usize,
    padding: bool,
    k: usize,
    order: SelectionOrder,
    cfg: &EngineConfig,
    instr: &Instrumentation,
) -> Result<TopKResult<T>> {
    cfg.validate(T::elem_bytes())?;
    validate_input(input, k)?;
    let keys = encode_all(input, order);
    let pivot = radix_select(&keys, k, T::WIDTH, cfg, instr)?;
    drop(keys);
    instr.add_transactions(
        INPUT_SCANS
            * task_transactions(offset, input.len(), T::elem_bytes(), cfg.pack_size, padding),
    );
    filter(input, pivot, k, order, cfg, instr)
}

/// An engine instance: a configuration plus the counters of its last run.
#[derive(Debug)]
pub struct RadixTopK {
    cfg: EngineConfig,
    instr: Instrumentation,
}

impl RadixTopK {
    pub fn new(cfg: EngineConfig) -> Result<Self> {
        cfg.validate(1)?;
        let instr = Instrumentation::new(cfg.grid_size);
        Ok(RadixTopK { cfg, instr })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn instrumentation(&self) -> InstrumentationSnapshot {
        self.instr.snapshot()
    }

    pub fn topk<T: RadixValue>(
        &mut self,
        input: &[T],
        k: usize,
        order: SelectionOrder,
    ) -> Result<TopKResult<T>> {
        self.instr.reset(self.cfg.grid_size);
        topk_instrumented(input, k, order, &self.cfg, &self.instr)
    }

    pub fn batch_topk<T: RadixValue>(
        &mut self,
        batch: &crate::batch::BatchInput<T>,
        order: SelectionOrder,
        opts: crate::batch::BatchOptions,
    ) -> Result<crate::batch::BatchOutput<T>> {
        self.instr.reset(self.cfg.grid_size);
        crate::batch::batch_topk(batch, order, &self.cfg, opts, &self.instr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EngineConfig {
        EngineConfig::default()
            .with_block_size(128)
            .with_grid_size(4)
    }

    #[test]
    fn one_element() {
        let r = topk(&[3.5f32], 1, SelectionOrder::Largest, &cfg()).unwrap();
        assert_eq!(r.values, vec![3.5]);
        assert_eq!(r.indices, vec![0]);
    }

    #[test]
    fn consecutive_integers() {
        let input: Vec<u32> = (0..1u32 << 20).collect();
        let r = topk(&input, 4, SelectionOrder::Largest, &cfg()).unwrap();
        let top = (1u32 << 20) - 1;
        assert_eq!(r.values, vec![top, top - 1, top - 2, top - 3]);
        let r = topk(&input, 4, SelectionOrder::Smallest, &cfg()).unwrap();
        assert_eq!(r.values, vec![0, 1, 2, 3]);
        assert_eq!(r.pivot, 3);
    }

    #[test]
    fn errors() {
        let c = cfg();
        assert!(matches!(
            topk::<f32>(&[], 1, SelectionOrder::Largest, &c),
            Err(TopKError::EmptyInput)
        ));
        assert!(matches!(
            topk(&[1.0f32, 2.0], 3, SelectionOrder::Largest, &c),
            Err(TopKError::RankOutOfRange { .. })
        ));
        assert!(matches!(
            topk(&[1.0f32, f32::NAN], 1, SelectionOrder::Largest, &c),
            Err(TopKError::NanInput { index: 1 })
        ));
        assert!(topk(
            &[1u32],
            1,
            SelectionOrder::Largest,
            &c.clone().with_digit_bits(0)
        )
        .is_err());
    }

    #[test]
    fn signed_zero_and_infinities() {
        let input = [0.0f32, -0.0, f32::INFINITY, f32::NEG_INFINITY, -1.0];
        let r = topk(&input, 3, SelectionOrder::Largest, &cfg()).unwrap();
        assert_eq!(r.indices, vec![2, 0, 1]);
        let r = topk(&input, 2, SelectionOrder::Smallest, &cfg()).unwrap();
        assert_eq!(r.indices, vec![3, 4]);
    }

    #[test]
    fn engine_resets_between_runs() {
        let mut e = RadixTopK::new(cfg()).unwrap();
        let input: Vec<u32> = (0..10_000).collect();
        e.topk(&input, 10, SelectionOrder::Largest).unwrap();
        let first = e.instrumentation();
        e.topk(&input, 10, SelectionOrder::Largest).unwrap();
        assert_eq!(first, e.instrumentation());
        assert!(first.passes <= 3);
        assert_eq!(first.modeled_transactions, 3 * 2500);
    }
}
