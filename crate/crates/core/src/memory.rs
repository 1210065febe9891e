//! Memory-transaction model for packed loads over a concatenated batch.
//!
//! A packed load moves `pack_size` bytes and must start on a `pack_size`
//! boundary. Loads never read past the end of a task. Without padding a task
//! loads its misaligned head one element at a time; with padding the first
//! pack starts at the nearest aligned position to the left of the task and
//! the leading elements are skipped.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaddedOffset {
    /// Aligned element position at or before the original offset.
    pub surrogate: usize,
    /// Elements between the surrogate and the original offset.
    pub lead_padding: usize,
}

impl PaddedOffset {
    pub fn original(&self) -> usize {
        self.surrogate + self.lead_padding
    }
}

pub fn padded_offset(offset: usize, elem_bytes: usize, pack_size: usize) -> PaddedOffset {
    assert!(
        elem_bytes > 0 && pack_size.is_multiple_of(elem_bytes),
        "pack size must be a multiple of the element size"
    );
    let surrogate = (offset * elem_bytes / pack_size) * pack_size / elem_bytes;
    PaddedOffset {
        surrogate,
        lead_padding: offset - surrogate,
    }
}

/// One modeled load instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Load {
    /// `pack_size` bytes starting at element `start`; the first `skip`
    /// elements are padding and are ignored.
    Pack {
        start: usize,
        skip: usize,
    },
    Scalar(usize),
}

/// Load schedule for the task occupying `[offset, offset + len)`.
pub fn load_plan(
    offset: usize,
    len: usize,
    elem_bytes: usize,
    pack_size: usize,
    padding: bool,
) -> Vec<Load> {
    let per_pack = pack_size / elem_bytes;
    let end = offset + len;
    let mut loads = Vec::new();
    let mut pos = offset;
    if padding {
        let p = padded_offset(offset, elem_bytes, pack_size);
        if p.lead_padding > 0 && p.surrogate + per_pack <= end {
            loads.push(Load::Pack {
                start: p.surrogate,
                skip: p.lead_padding,
            });
            pos = p.surrogate + per_pack;
        }
    }
    while pos < end && !pos.is_multiple_of(per_pack) {
        loads.push(Load::Scalar(pos));
        pos += 1;
    }
    while pos + per_pack <= end {
        loads.push(Load::Pack {
            start: pos,
            skip: 0,
        });
        pos += per_pack;
    }
    loads.extend((pos..end).map(Load::Scalar));
    loads
}

/// Transactions needed to load one task once.
pub fn task_transactions(
    offset: usize,
    len: usize,
    elem_bytes: usize,
    pack_size: usize,
    padding: bool,
) -> u64 {
    let per_pack = pack_size / elem_bytes;
    let lead = offset % per_pack;
    if padding && lead > 0 && lead + len >= per_pack {
        let span = lead + len;
        return (span / per_pack + span % per_pack) as u64;
    }
    let head = ((per_pack - lead) % per_pack).min(len);
    let rest = len - head;
    (head + rest / per_pack + rest % per_pack) as u64
}

/// Transactions to load every task of a batch once.
pub fn transaction_count(
    offsets: &[usize],
    lengths: &[usize],
    elem_bytes: usize,
    pack_size: usize,
    padding: bool,
) -> u64 {
    offsets
        .iter()
        .zip(lengths)
        .map(|(&o, &l)| task_transactions(o, l, elem_bytes, pack_size, padding))
        .sum()
}
