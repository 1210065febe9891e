//! Data-parallel execution model: a fixed grid of workers, each looping over
//! block-sized partitions of one or more task arrays.

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

/// One block-sized slice of one task's array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct WorkItem {
    pub task: usize,
    pub partition: usize,
    pub range: Range<usize>,
}

/// Partitions of `len` elements in order.
pub(crate) fn partitions(len: usize, block: usize) -> impl Iterator<Item = (usize, Range<usize>)> {
    (0..len.div_ceil(block)).map(move |p| (p, p * block..((p + 1) * block).min(len)))
}

/// How partitions are handed to workers.
pub(crate) enum WorkSource<'a> {
    /// Single task; worker `w` takes partitions `w, w + grid, w + 2 * grid, ...`.
    Strided {
        len: usize,
        block: usize,
        grid: usize,
    },
    /// Any number of tasks; workers claim `(task, partition)` pairs from a
    /// shared queue.
    Queue(&'a WorkQueue),
}

impl WorkSource<'_> {
    pub fn for_each(&self, worker: usize, mut f: impl FnMut(WorkItem)) {
        match *self {
            WorkSource::Strided { len, block, grid } => {
                let stride = grid * block;
                let mut start = worker * block;
                let mut partition = worker;
                while start < len {
                    f(WorkItem {
                        task: 0,
                        partition,
                        range: start..(start + block).min(len),
                    });
                    start += stride;
                    partition += grid;
                }
            }
            WorkSource::Queue(queue) => {
                while let Some(item) = queue.claim() {
                    f(item.clone());
                }
            }
        }
    }
}

/// Flattened `(task, partition)` plane with an atomic claim cursor.
pub(crate) struct WorkQueue {
    items: Vec<WorkItem>,
    next: AtomicUsize,
}

impl WorkQueue {
    pub fn new(task_lens: impl IntoIterator<Item = usize>, block: usize) -> Self {
        let mut items = Vec::new();
        for (task, len) in task_lens.into_iter().enumerate() {
            items.extend(partitions(len, block).map(|(partition, range)| WorkItem {
                task,
                partition,
                range,
            }));
        }
        WorkQueue {
            items,
            next: AtomicUsize::new(0),
        }
    }

    fn claim(&self) -> Option<&WorkItem> {
        let i = self.next.fetch_add(1, Ordering::Relaxed);
        self.items.get(i)
    }
}

/// Run `worker(w)` for every `w` in `0..grid` concurrently and collect the
/// results in worker order.
pub(crate) fn run_workers<R, F>(grid: usize, worker: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    if grid == 1 {
        return vec![worker(0)];
    }
    thread::scope(|s| {
        let handles: Vec<_> = (1..grid)
            .map(|w| {
                s.spawn({
                    let worker = &worker;
                    move || worker(w)
                })
            })
            .collect();
        let mut out = Vec::with_capacity(grid);
        out.push(worker(0));
        for h in handles {
            out.push(h.join().expect("worker panicked"));
        }
        out
    })
}
