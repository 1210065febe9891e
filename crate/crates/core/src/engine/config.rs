use serde::{Deserialize, Serialize};

use crate::error::{Result, TopKError};
use crate::value::RadixValue;

/// How a worker stages matches before writing them to a shared output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferPolicy {
    /// Capacity `block_size`; flushed after every partition that left it
    /// non-empty.
    Naive,
    /// Capacity `2 * block_size`; flushed only once occupancy exceeds
    /// `block_size`, plus one drain at the end.
    FlushEfficient,
}

/// Where counters and output cursors are updated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomicsMode {
    /// Worker-private histograms and buffers merged once per worker.
    Hierarchical,
    /// Every element updates the shared histogram or claims its own output
    /// slot. Ablation baseline only.
    Global,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub digit_bits: u32,
    /// Elements per partition.
    pub block_size: usize,
    /// Number of workers.
    pub grid_size: usize,
    pub buffer_policy: BufferPolicy,
    pub atomics: AtomicsMode,
    /// Bytes per modeled memory transaction.
    pub pack_size: usize,
    /// Largest buffer capacity for the single-flush filter path; `0` disables
    /// it.
    pub filter_capacity_ceiling: usize,
}

pub const MIN_FILTER_CAPACITY: usize = 128;

impl Default for EngineConfig {
    fn default() -> Self {
        let workers = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
            .min(16);
        EngineConfig {
            digit_bits: 12,
            block_size: 1024,
            grid_size: workers,
            buffer_policy: BufferPolicy::FlushEfficient,
            atomics: AtomicsMode::Hierarchical,
            pack_size: 16,
            filter_capacity_ceiling: 4096,
        }
    }
}

impl EngineConfig {
    /// Defaults with the digit width suited to `T` (12 bits for 32-bit keys,
    /// 8 bits for 16-bit keys).
    pub fn for_value<T: RadixValue>() -> Self {
        EngineConfig {
            digit_bits: T::DEFAULT_DIGIT,
            ..Default::default()
        }
    }

    pub fn with_digit_bits(mut self, d: u32) -> Self {
        self.digit_bits = d;
        self
    }

    pub fn with_block_size(mut self, block: usize) -> Self {
        self.block_size = block;
        self
    }

    pub fn with_grid_size(mut self, grid: usize) -> Self {
        self.grid_size = grid;
        self
    }

    pub fn with_buffer_policy(mut self, policy: BufferPolicy) -> Self {
        self.buffer_policy = policy;
        self
    }

    pub fn with_atomics(mut self, atomics: AtomicsMode) -> Self {
        self.atomics = atomics;
        self
    }

    pub fn with_pack_size(mut self, pack: usize) -> Self {
        self.pack_size = pack;
        self
    }

    pub fn with_filter_capacity_ceiling(mut self, ceiling: usize) -> Self {
        self.filter_capacity_ceiling = ceiling;
        self
    }

    pub fn radix(&self) -> usize {
        1usize << self.digit_bits
    }

    pub fn validate(&self, elem_bytes: usize) -> Result<()> {
        if !(1..=16).contains(&self.digit_bits) {
            return Err(TopKError::InvalidConfig(format!(
                "digit width {} not in [1, 16]",
                self.digit_bits
            )));
        }
        if self.block_size == 0 {
            return Err(TopKError::InvalidConfig("block size must be >= 1".into()));
        }
        if self.grid_size == 0 {
            return Err(TopKError::InvalidConfig("grid size must be >= 1".into()));
        }
        if !self.pack_size.is_power_of_two() || self.pack_size < elem_bytes {
            return Err(TopKError::InvalidConfig(format!(
                "pack size {} must be a power of two >= {elem_bytes}",
                self.pack_size
            )));
        }
        Ok(())
    }

    /// Capacity of the specialized filter buffer for rank `k`, if one applies.
    pub fn filter_capacity(&self, k: usize) -> Option<usize> {
        if self.buffer_policy != BufferPolicy::FlushEfficient
            || self.atomics != AtomicsMode::Hierarchical
        {
            return None;
        }
        let cap = k.max(MIN_FILTER_CAPACITY).next_power_of_two();
        (cap <= self.filter_capacity_ceiling).then_some(cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let ok = EngineConfig::default();
        assert!(ok.validate(4).is_ok());
        assert!(ok.clone().with_digit_bits(0).validate(4).is_err());
        assert!(ok.clone().with_digit_bits(17).validate(4).is_err());
        assert!(ok.clone().with_block_size(0).validate(4).is_err());
        assert!(ok.clone().with_grid_size(0).validate(4).is_err());
        assert!(ok.clone().with_pack_size(12).validate(4).is_err());
        assert!(ok.clone().with_pack_size(2).validate(4).is_err());
        assert!(ok.clone().with_pack_size(2).validate(2).is_ok());
    }

    #[test]
    fn filter_capacity_tiers() {
        let cfg = EngineConfig::default();
        assert_eq!(cfg.filter_capacity(1), Some(128));
        assert_eq!(cfg.filter_capacity(128), Some(128));
        assert_eq!(cfg.filter_capacity(129), Some(256));
        assert_eq!(cfg.filter_capacity(2048), Some(2048));
        assert_eq!(cfg.filter_capacity(4097), None);
        let naive = cfg.clone().with_buffer_policy(BufferPolicy::Naive);
        assert_eq!(naive.filter_capacity(10), None);
        assert_eq!(cfg.with_filter_capacity_ceiling(0).filter_capacity(1), None);
    }
}
