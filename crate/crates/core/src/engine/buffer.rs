//! Worker-side write buffers and the shared output they flush into.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering::Relaxed};

use crate::engine::config::{AtomicsMode, BufferPolicy, EngineConfig};
use crate::error::{Result, TopKError};

/// Shared output array with a single claim cursor. Each flush claims one
/// contiguous run.
pub(crate) struct OutputSink {
    slots: Vec<AtomicU64>,
    cursor: AtomicUsize,
}

impl OutputSink {
    pub fn new(len: usize) -> Self {
        OutputSink {
            slots: (0..len).map(|_| AtomicU64::new(0)).collect(),
            cursor: AtomicUsize::new(0),
        }
    }

    fn write_run(&self, run: &[u64]) -> Result<()> {
        let base = self.cursor.fetch_add(run.len(), Relaxed);
        let end = base + run.len();
        if end > self.slots.len() {
            return Err(TopKError::InvariantViolation(format!(
                "output overflow: {end} entries for {} slots",
                self.slots.len()
            )));
        }
        for (slot, &v) in self.slots[base..end].iter().zip(run) {
            slot.store(v, Relaxed);
        }
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.cursor.load(Relaxed).min(self.slots.len())
    }

    pub fn into_vec(self) -> Vec<u64> {
        let n = self.written();
        self.slots
            .into_iter()
            .take(n)
            .map(AtomicU64::into_inner)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum BufferMode {
    /// No staging: every match claims its own slot.
    PerElement,
    Naive {
        capacity: usize,
    },
    FlushEfficient {
        block: usize,
    },
    /// Holds everything the worker will ever write; flushed once.
    Fixed {
        capacity: usize,
    },
}

impl BufferMode {
    pub fn for_gather(cfg: &EngineConfig) -> Self {
        match (cfg.atomics, cfg.buffer_policy) {
            (AtomicsMode::Global, _) => BufferMode::PerElement,
            (_, BufferPolicy::Naive) => BufferMode::Naive {
                capacity: cfg.block_size,
            },
            (_, BufferPolicy::FlushEfficient) => BufferMode::FlushEfficient {
                block: cfg.block_size,
            },
        }
    }

    pub fn for_filter(cfg: &EngineConfig, k: usize) -> Self {
        match cfg.filter_capacity(k) {
            Some(capacity) => BufferMode::Fixed { capacity },
            None => Self::for_gather(cfg),
        }
    }

    fn capacity(self) -> usize {
        match self {
            BufferMode::PerElement => 0,
            BufferMode::Naive { capacity } | BufferMode::Fixed { capacity } => capacity,
            BufferMode::FlushEfficient { block } => 2 * block,
        }
    }
}

pub(crate) struct WriteBuffer {
    mode: BufferMode,
    entries: Vec<u64>,
    pub flushes: u64,
    pub drains: u64,
}

impl WriteBuffer {
    pub fn new(mode: BufferMode) -> Self {
        WriteBuffer {
            mode,
            entries: Vec::with_capacity(mode.capacity()),
            flushes: 0,
            drains: 0,
        }
    }

    #[inline]
    pub fn push(&mut self, sink: &OutputSink, value: u64) -> Result<()> {
        match self.mode {
            BufferMode::PerElement => {
                self.flushes += 1;
                sink.write_run(&[value])
            }
            _ => {
                if self.entries.len() == self.mode.capacity() {
                    return Err(TopKError::InvariantViolation(format!(
                        "write buffer of capacity {} overflowed",
                        self.mode.capacity()
                    )));
                }
                self.entries.push(value);
                Ok(())
            }
        }
    }

    /// Called after each partition.
    pub fn end_partition(&mut self, sink: &OutputSink) -> Result<()> {
        let due = match self.mode {
            BufferMode::Naive { .. } => !self.entries.is_empty(),
            BufferMode::FlushEfficient { block } => self.entries.len() > block,
            BufferMode::PerElement | BufferMode::Fixed { .. } => false,
        };
        if due {
            self.flush(sink)?;
        }
        Ok(())
    }

    /// Final drain once the worker has no more partitions.
    pub fn finish(&mut self, sink: &OutputSink) -> Result<()> {
        if !self.entries.is_empty() {
            self.drains += 1;
            self.flush(sink)?;
        }
        Ok(())
    }

    fn flush(&mut self, sink: &OutputSink) -> Result<()> {
        self.flushes += 1;
        let r = sink.write_run(&self.entries);
        self.entries.clear();
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_flushes_every_nonempty_partition() {
        let sink = OutputSink::new(10);
        let mut b = WriteBuffer::new(BufferMode::Naive { capacity: 2 });
        b.push(&sink, 1).unwrap();
        b.end_partition(&sink).unwrap();
        b.end_partition(&sink).unwrap();
        b.push(&sink, 2).unwrap();
        b.push(&sink, 3).unwrap();
        b.end_partition(&sink).unwrap();
        b.finish(&sink).unwrap();
        assert_eq!((b.flushes, b.drains), (2, 0));
        assert_eq!(sink.into_vec(), vec![1, 2, 3]);
    }

    #[test]
    fn flush_efficient_waits_for_half_capacity() {
        let sink = OutputSink::new(10);
        let mut b = WriteBuffer::new(BufferMode::FlushEfficient { block: 2 });
        b.push(&sink, 1).unwrap();
        b.push(&sink, 2).unwrap();
        b.end_partition(&sink).unwrap(); // exactly block: strict check holds it
        assert_eq!(b.flushes, 0);
        b.push(&sink, 3).unwrap();
        b.end_partition(&sink).unwrap();
        assert_eq!(b.flushes, 1);
        b.push(&sink, 4).unwrap();
        b.finish(&sink).unwrap();
        assert_eq!((b.flushes, b.drains), (2, 1));
        assert_eq!(sink.written(), 4);
    }

    #[test]
    fn fixed_overflow_is_an_error() {
        let sink = OutputSink::new(10);
        let mut b = WriteBuffer::new(BufferMode::Fixed { capacity: 1 });
        b.push(&sink, 1).unwrap();
        assert!(b.push(&sink, 2).is_err());
    }

    #[test]
    fn sink_overflow_is_an_error() {
        let sink = OutputSink::new(1);
        let mut b = WriteBuffer::new(BufferMode::PerElement);
        b.push(&sink, 1).unwrap();
        assert!(matches!(
            b.push(&sink, 2),
            Err(TopKError::InvariantViolation(_))
        ));
    }
}
