//! Sort-based reference selection.

use std::cmp::Ordering;

use crate::engine::TopKResult;
use crate::error::{Result, TopKError};
use crate::keycodec::SelectionOrder;
use crate::value::{find_nan, RadixValue};

fn ranked<T: RadixValue>(input: &[T], k: usize, order: SelectionOrder) -> Result<Vec<usize>> {
    if input.is_empty() {
        return Err(TopKError::EmptyInput);
    }
    if k == 0 || k > input.len() {
        return Err(TopKError::RankOutOfRange { k, n: input.len() });
    }
    if let Some(index) = find_nan(input) {
        return Err(TopKError::NanInput { index });
    }
    let mut idx: Vec<usize> = (0..input.len()).collect();
    let better = |a: &usize, b: &usize| -> Ordering {
        let c = input[*b].total_cmp(&input[*a]);
        let c = match order {
            SelectionOrder::Largest => c,
            SelectionOrder::Smallest => c.reverse(),
        };
        c.then(a.cmp(b))
    };
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, better);
        idx.truncate(k);
    }
    idx.sort_unstable_by(better);
    Ok(idx)
}

/// Best-first, ties by ascending index.
pub fn oracle_topk<T: RadixValue>(
    input: &[T],
    k: usize,
    order: SelectionOrder,
) -> Result<TopKResult<T>> {
    let indices = ranked(input, k, order)?;
    let values: Vec<T> = indices.iter().map(|&i| input[i]).collect();
    let pivot = values[k - 1];
    Ok(TopKResult {
        values,
        indices,
        pivot,
    })
}

pub fn oracle_kth<T: RadixValue>(input: &[T], k: usize, order: SelectionOrder) -> Result<T> {
    Ok(oracle_topk(input, k, order)?.pivot)
}
