//! Active-path bookkeeping for the wavefront pipeline: stream compaction of
//! the active index list and the two-slot count buffer that sizes the next
//! bounce's dispatch.

use super::slots::Slots;
use super::{WorkerPool, CHUNK_SIZE};
use crate::config::CompactionMode;
use rayon::prelude::*;
use std::sync::atomic::{AtomicUsize, Ordering};

/// Indices of live paths plus the ping-pong counter pair.
///
/// `count_pair[0]` is the current bounce's active count and
/// `index_list[..count_pair[0]]` holds distinct path indices.
/// `count_pair[1]` accumulates the next bounce's count; it is zero at every
/// stage boundary except between compaction and indirect preparation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActiveSet {
    pub index_list: Vec<u32>,
    pub count_pair: [usize; 2],
}

impl ActiveSet {
    /// Every index in `0..n`, ascending.
    pub fn full(n: usize) -> ActiveSet {
        ActiveSet {
            index_list: (0..n as u32).collect(),
            count_pair: [n, 0],
        }
    }

    pub fn reset_full(&mut self, n: usize) {
        self.index_list.clear();
        self.index_list.extend(0..n as u32);
        self.count_pair = [n, 0];
    }

    pub fn count(&self) -> usize {
        self.count_pair[0]
    }

    pub fn active(&self) -> &[u32] {
        &self.index_list[..self.count_pair[0]]
    }

    /// Compacted survivors awaiting promotion by [`prepare_indirect`].
    pub fn pending(&self) -> &[u32] {
        &self.index_list[..self.count_pair[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DispatchArgs {
    pub workgroup_count: u32,
    pub group_size: u32,
}

impl DispatchArgs {
    pub fn for_count(count: usize, group_size: u32) -> DispatchArgs {
        DispatchArgs {
            workgroup_count: count.div_ceil(group_size as usize) as u32,
            group_size,
        }
    }

    pub fn threads(&self) -> u64 {
        self.workgroup_count as u64 * self.group_size as u64
    }
}

/// Exclusive prefix sum. Returns the offsets and the total.
pub fn exclusive_scan(counts: &[usize]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(counts.len());
    let mut total = 0;
    for &c in counts {
        offsets.push(total);
        total += c;
    }
    (offsets, total)
}

/// Rewrites `index_list` in place so its first `count_pair[1]` entries are
/// the current active indices whose `alive` flag is set.
///
/// Every worker reads its share of the list before any worker writes, so the
/// in-place reuse never reads an overwritten slot. Deterministic mode keeps
/// ascending order; atomic mode appends through a shared cursor.
pub fn compact(alive: &[bool], active: &mut ActiveSet, mode: CompactionMode, pool: &WorkerPool) {
    assert_eq!(
        active.count_pair[1], 0,
        "next-count slot must be clear before compaction"
    );
    let count = active.count_pair[0];
    let list = &mut active.index_list[..count];

    // Read phase.
    let survivors: Vec<Vec<u32>> = pool.install(|| {
        list.par_chunks(CHUNK_SIZE)
            .map(|chunk| chunk.iter().copied().filter(|&i| alive[i as usize]).collect())
            .collect()
    });

    // Write phase.
    let total = match mode {
        CompactionMode::Deterministic => {
            let counts: Vec<usize> = survivors.iter().map(Vec::len).collect();
            let (offsets, total) = exclusive_scan(&counts);
            // Split the destination prefix into one disjoint run per chunk.
            let mut runs = Vec::with_capacity(survivors.len());
            let mut rest = &mut list[..total];
            for (k, &c) in counts.iter().enumerate() {
                debug_assert_eq!(offsets[k], total - rest.len());
                let (run, tail) = rest.split_at_mut(c);
                runs.push(run);
                rest = tail;
            }
            pool.install(|| {
                runs.into_par_iter()
                    .zip(survivors.par_iter())
                    .for_each(|(run, src)| run.copy_from_slice(src));
            });
            total
        }
        CompactionMode::Atomic => {
            let cursor = AtomicUsize::new(0);
            let slots = Slots::new(list);
            pool.install(|| {
                survivors.par_iter().flatten().for_each(|&i| {
                    let slot = cursor.fetch_add(1, Ordering::Relaxed);
                    // SAFETY: each fetch_add result is unique.
                    unsafe { *slots.get(slot) = i };
                });
            });
            cursor.into_inner()
        }
    };
    active.count_pair[1] = total;
}

/// Promotes the next-bounce count to the current slot, clears the
/// accumulator, and sizes the next dispatch.
pub fn prepare_indirect(active: &mut ActiveSet, group_size: u32) -> DispatchArgs {
    active.count_pair = [active.count_pair[1], 0];
    DispatchArgs::for_count(active.count_pair[0], group_size)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(mask: &[bool], mode: CompactionMode, workers: usize) -> ActiveSet {
        let mut set = ActiveSet::full(mask.len());
        compact(mask, &mut set, mode, &WorkerPool::new(workers));
        set
    }

    #[test]
    fn example_mask() {
        let mask = [true, false, true, true, false, false, true, false];
        let set = run(&mask, CompactionMode::Deterministic, 2);
        assert_eq!(set.pending(), &[0, 2, 3, 6]);
        assert_eq!(set.count_pair, [8, 4]);
    }

    #[test]
    fn all_alive_is_identity() {
        let mask = vec![true; 1000];
        let set = run(&mask, CompactionMode::Deterministic, 3);
        assert_eq!(set.pending(), (0..1000).collect::<Vec<u32>>().as_slice());
    }

    #[test]
    fn prepare_indirect_example() {
        let mut set = ActiveSet {
            index_list: vec![0; 4096],
            count_pair: [4096, 1337],
        };
        let args = prepare_indirect(&mut set, 64);
        assert_eq!(set.count_pair, [1337, 0]);
        assert_eq!(args.workgroup_count, 21);
        assert!(args.threads() >= 1337);
        set.count_pair[1] = 0;
        assert_eq!(prepare_indirect(&mut set, 64).workgroup_count, 0);
    }

    #[test]
    fn scan() {
        assert_eq!(exclusive_scan(&[3, 0, 2, 5]), (vec![0, 3, 3, 5], 10));
        assert_eq!(exclusive_scan(&[]), (vec![], 0));
    }

    #[test]
    fn compaction_of_a_sparse_list() {
        // Second pass over an already-compacted, non-contiguous list.
        let alive: Vec<bool> = (0..2000).map(|i| i % 3 != 0).collect();
        let mut set = ActiveSet::full(2000);
        let pool = WorkerPool::new(4);
        compact(&alive, &mut set, CompactionMode::Deterministic, &pool);
        prepare_indirect(&mut set, 64);
        let alive2: Vec<bool> = (0..2000).map(|i| i % 3 != 0 && i % 5 != 0).collect();
        compact(&alive2, &mut set, CompactionMode::Deterministic, &pool);
        let expected: Vec<u32> = (0..2000).filter(|i| alive2[*i as usize]).collect();
        assert_eq!(set.pending(), expected.as_slice());
    }

    #[test]
    fn atomic_mode_is_set_equal() {
        let mask: Vec<bool> = (0..5000).map(|i| (i * 7) % 11 < 5).collect();
        let set = run(&mask, CompactionMode::Atomic, 4);
        let mut got = set.pending().to_vec();
        got.sort_unstable();
        let expected: Vec<u32> = (0..5000).filter(|&i| mask[i as usize]).collect();
        assert_eq!(got, expected);
    }
}
