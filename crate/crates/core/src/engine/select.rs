//! Phase one: iterate digit windows until the pivot key is isolated.

use std::borrow::Cow;

use crate::engine::config::EngineConfig;
use crate::engine::gather::select_candidates_sized;
use crate::engine::histogram::{count_bins, select_bin, Histogram};
use crate::engine::instrument::Instrumentation;
use crate::error::{Result, TopKError};
use crate::keycodec::{DigitWindow, RadixKey};

/// The `k`-th largest key together with the bookkeeping the filter needs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pivot {
    pub key: RadixKey,
    /// Rank of the pivot among the keys equal to it (1-based).
    pub rank: usize,
    /// Number of input keys equal to the pivot.
    pub ties: usize,
}

impl Pivot {
    /// Keys strictly above the pivot.
    pub fn above(&self, k: usize) -> usize {
        k - self.rank
    }
}

/// Surviving candidates of one task between passes.
#[derive(Clone, Debug)]
pub struct SelectionState<'a> {
    candidates: Cow<'a, [RadixKey]>,
    k_remaining: usize,
    window: Option<DigitWindow>,
}

/// What one pass observed; used by scaling and batch accounting.
#[derive(Clone, Debug)]
pub struct PassOutcome {
    pub histogram: Histogram,
    pub bin: usize,
    pub scanned: usize,
}

impl<'a> SelectionState<'a> {
    pub fn new(keys: &'a [RadixKey], k: usize, key_width: u32, digit_bits: u32) -> Result<Self> {
        if keys.is_empty() {
            return Err(TopKError::EmptyInput);
        }
        if k == 0 || k > keys.len() {
            return Err(TopKError::RankOutOfRange { k, n: keys.len() });
        }
        Ok(SelectionState {
            candidates: Cow::Borrowed(keys),
            k_remaining: k,
            window: Some(DigitWindow::first(key_width, digit_bits)),
        })
    }

    pub fn candidates(&self) -> &[RadixKey] {
        &self.candidates
    }

    pub fn k_remaining(&self) -> usize {
        self.k_remaining
    }

    pub fn window(&self) -> Option<DigitWindow> {
        self.window
    }

    /// More than one candidate left and digits still to examine.
    pub fn is_live(&self) -> bool {
        self.candidates.len() > 1 && self.window.is_some()
    }

    /// Run one count / select-bin / select-candidates pass.
    pub fn step(&mut self, cfg: &EngineConfig, instr: &Instrumentation) -> Result<PassOutcome> {
        let window = self.window.expect("step on exhausted state");
        let histogram = count_bins(&self.candidates, window, cfg, instr)?;
        let (bin, k_new) = select_bin(&histogram, self.k_remaining)?;
        let survivors = select_candidates_sized(
            &self.candidates,
            bin,
            window,
            histogram.counts()[bin] as usize,
            cfg,
            instr,
        )?;
        instr.add_pass();
        let scanned = self.candidates.len();
        self.apply(survivors, k_new, window);
        Ok(PassOutcome {
            histogram,
            bin,
            scanned,
        })
    }

    pub(crate) fn apply(&mut self, survivors: Vec<RadixKey>, k_new: usize, window: DigitWindow) {
        debug_assert!(k_new >= 1 && k_new <= survivors.len());
        self.candidates = Cow::Owned(survivors);
        self.k_remaining = k_new;
        self.window = window.advance();
    }

    /// Pivot of a finished state.
    pub fn pivot(&self) -> Pivot {
        debug_assert!(!self.is_live());
        // with one candidate left it is unique; at exhaustion every survivor
        // is bit-identical
        Pivot {
            key: self.candidates[0],
            rank: self.k_remaining,
            ties: self.candidates.len(),
        }
    }

    pub fn into_owned(self) -> SelectionState<'static> {
        SelectionState {
            candidates: Cow::Owned(self.candidates.into_owned()),
            k_remaining: self.k_remaining,
            window: self.window,
        }
    }
}

/// Find the `k`-th largest key of `input_keys` (duplicates counted).
pub fn radix_select(
    input_keys: &[RadixKey],
    k: usize,
    key_width: u32,
    cfg: &EngineConfig,
    instr: &Instrumentation,
) -> Result<Pivot> {
    let mut state = SelectionState::new(input_keys, k, key_width, cfg.digit_bits)?;
    while state.is_live() {
        state.step(cfg, instr)?;
    }
    Ok(state.pivot())
}
