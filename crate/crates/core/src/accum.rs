//! Accumulators that merge duplicate column indices of an intermediate product.
//!
//! Two kernels are provided: dense accumulation (a value buffer plus a
//! one-byte-per-slot bitmap, drained in insertion order) and sort-merge
//! accumulation. Both sum duplicates in ascending input position, so for the
//! same stream they produce bit-identical values.

use alloc::vec::Vec;
use core::ops::Range;

use crate::index::{ColIndex, Payload};
use crate::sortnet;

/// Stream sizes that steer accumulator selection and sort grouping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccumThresholds {
    /// Streams shorter than this are sorted; longer ones use dense accumulation.
    pub sort_dense_crossover: usize,
    /// Preferred size of a sort; consecutive small chunks are merged toward it.
    pub sort_sweet_spot: usize,
}

impl Default for AccumThresholds {
    fn default() -> Self {
        Self {
            sort_dense_crossover: 256,
            sort_sweet_spot: 32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccumKind {
    Sort,
    Dense,
}

#[inline]
pub fn select_accumulator(n_elems: usize, thresholds: &AccumThresholds) -> AccumKind {
    if n_elems < thresholds.sort_dense_crossover {
        AccumKind::Sort
    } else {
        AccumKind::Dense
    }
}

/// Groups consecutive chunk sizes so that each group's total lands as close
/// to `target` as a greedy left-to-right scan allows.
///
/// A group is closed when adding the next chunk would not bring its total
/// strictly closer to `target`. Chunks are never split.
pub fn merge_chunks_for_sort(chunk_sizes: &[usize], target: usize) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    merge_chunks_into(chunk_sizes, target, |r| groups.push(r));
    groups
}

pub(crate) fn merge_chunks_into(chunk_sizes: &[usize], target: usize, mut emit: impl FnMut(Range<usize>)) {
    if chunk_sizes.is_empty() {
        return;
    }
    let mut start = 0;
    let mut total = chunk_sizes[0];
    for (i, &s) in chunk_sizes.iter().enumerate().skip(1) {
        let grown = total + s;
        if grown.abs_diff(target) < total.abs_diff(target) {
            total = grown;
        } else {
            emit(start..i);
            start = i;
            total = s;
        }
    }
    emit(start..chunk_sizes.len());
}

/// Dense accumulator over the local index range `[0, capacity)`.
///
/// Invariant between calls: every bitmap byte is zero and `col_buf` is empty,
/// so a drained accumulator behaves like a fresh one. Buffer slots are
/// written on first touch, so they never need clearing.
#[derive(Clone, Debug, Default)]
pub struct DenseAccumulator<L, V> {
    buffer: Vec<V>,
    bitmap: Vec<u8>,
    col_buf: Vec<L>,
}

impl<L: ColIndex, V: Payload> DenseAccumulator<L, V> {
    pub fn new(capacity: usize) -> Self {
        let mut acc = Self {
            buffer: Vec::new(),
            bitmap: Vec::new(),
            col_buf: Vec::new(),
        };
        acc.reserve_capacity(capacity);
        acc
    }

    pub fn capacity(&self) -> usize {
        self.bitmap.len()
    }

    /// Number of distinct indices currently held.
    pub fn count(&self) -> usize {
        self.col_buf.len()
    }

    /// Grows the index range to at least `capacity`.
    pub fn reserve_capacity(&mut self, capacity: usize) {
        if capacity > self.bitmap.len() {
            self.bitmap.resize(capacity, 0);
            if V::NUMERIC {
                self.buffer.resize(capacity, V::default());
            }
        }
    }

    /// Adds `(cols[k], vals[k])` for all `k`.
    #[inline]
    pub fn scatter(&mut self, cols: &[L], vals: &[V]) {
        debug_assert_eq!(cols.len(), vals.len());
        for (&c, &v) in cols.iter().zip(vals) {
            self.insert(c, v);
        }
    }

    /// Sets the bitmap slot for `col`; true if it was clear.
    #[inline(always)]
    pub fn mark(&mut self, col: L) -> bool {
        let j = col.to_usize();
        let fresh = self.bitmap[j] == 0;
        self.bitmap[j] = 1;
        fresh
    }

    #[inline(always)]
    pub fn unmark(&mut self, col: L) {
        self.bitmap[col.to_usize()] = 0;
    }

    #[inline(always)]
    pub fn insert(&mut self, col: L, val: V) {
        let j = col.to_usize();
        assert!(j < self.bitmap.len(), "index {j} outside accumulator of length {}", self.bitmap.len());
        if self.bitmap[j] == 0 {
            self.bitmap[j] = 1;
            self.col_buf.push(col);
            if V::NUMERIC {
                self.buffer[j] = val;
            }
        } else if V::NUMERIC {
            self.buffer[j].accumulate(val);
        }
    }

    /// Hands out every held `(col, val)` in first-insertion order and resets
    /// the touched bitmap slots.
    #[inline]
    pub fn drain(&mut self, mut out: impl FnMut(L, V)) {
        for &c in &self.col_buf {
            let j = c.to_usize();
            out(c, if V::NUMERIC { self.buffer[j] } else { V::default() });
            self.bitmap[j] = 0;
        }
        self.col_buf.clear();
    }

    /// Symbolic variant: counts distinct indices touching only the bitmap.
    /// The bitmap is cleared with a second pass over `cols`.
    pub fn count_distinct(&mut self, cols: &[L]) -> usize {
        debug_assert!(self.col_buf.is_empty());
        let mut count = 0;
        for &c in cols {
            let j = c.to_usize();
            assert!(j < self.bitmap.len(), "index {j} outside accumulator of length {}", self.bitmap.len());
            count += (self.bitmap[j] == 0) as usize;
            self.bitmap[j] = 1;
        }
        for &c in cols {
            self.bitmap[c.to_usize()] = 0;
        }
        count
    }

    #[cfg(test)]
    pub(crate) fn is_clear(&self) -> bool {
        self.col_buf.is_empty() && self.bitmap.iter().all(|&b| b == 0)
    }
}

/// Dense accumulation of one stream. Output is in first-occurrence order.
pub fn dense_accumulate<L: ColIndex>(
    cols: &[L],
    vals: &[f64],
    acc: &mut DenseAccumulator<L, f64>,
) -> (Vec<L>, Vec<f64>) {
    acc.scatter(cols, vals);
    let mut out_cols = Vec::with_capacity(acc.count());
    let mut out_vals = Vec::with_capacity(acc.count());
    acc.drain(|c, v| {
        out_cols.push(c);
        out_vals.push(v);
    });
    (out_cols, out_vals)
}

/// Number of distinct indices in `cols` (precise prediction).
pub fn dense_accumulate_symbolic<L: ColIndex, V: Payload>(cols: &[L], acc: &mut DenseAccumulator<L, V>) -> usize {
    acc.count_distinct(cols)
}

/// Reusable storage for [`sort_accumulate`].
#[derive(Clone, Debug, Default)]
pub struct SortScratch<L> {
    keys: Vec<(L, u32)>,
    packed: Vec<u64>,
    use_packed: bool,
}

impl<L: ColIndex> SortScratch<L> {
    pub fn new() -> Self {
        Self {
            keys: Vec::new(),
            packed: Vec::new(),
            use_packed: false,
        }
    }

    /// Sorts `(cols[k], k)` pairs. Keys are unique so the order is total and
    /// equal columns come out in ascending input position.
    ///
    /// When every column fits in 32 bits the pair is packed into one `u64`
    /// (column high, position low) and the result lives in `packed`;
    /// otherwise in `keys`.
    fn sort_keys(&mut self, cols: &[L]) {
        assert!(cols.len() <= u32::MAX as usize);
        self.use_packed = cols.iter().all(|c| c.to_usize() <= u32::MAX as usize);
        if self.use_packed {
            self.packed.clear();
            self.packed
                .extend(cols.iter().enumerate().map(|(k, &c)| (c.to_usize() as u64) << 32 | k as u64));
            sort_slice(&mut self.packed);
        } else {
            self.keys.clear();
            self.keys
                .extend(cols.iter().enumerate().map(|(k, &c)| (c, k as u32)));
            sort_slice(&mut self.keys);
        }
    }
}

fn sort_slice<T: Copy + Ord + sortnet::Sentinel>(keys: &mut [T]) {
    if keys.len() <= sortnet::MAX_LEN {
        sortnet::sort_small(keys);
    } else {
        keys.sort_unstable();
    }
}

/// Merges runs of equal columns in sorted `(col, position)` order.
#[inline]
fn merge_sorted<L: ColIndex, V: Payload>(
    n: usize,
    key: impl Fn(usize) -> (L, u32),
    vals: &[V],
    mut out: impl FnMut(L, V),
) -> usize {
    let mut produced = 0;
    let mut k = 0;
    while k < n {
        let (c, pos) = key(k);
        let mut sum = vals[pos as usize];
        k += 1;
        while k < n {
            let (c2, pos2) = key(k);
            if c2 != c {
                break;
            }
            sum.accumulate(vals[pos2 as usize]);
            k += 1;
        }
        out(c, sum);
        produced += 1;
    }
    produced
}

/// Sort-merge accumulation handing each merged `(col, sum)` to `out` in
/// ascending column order. Returns the number of entries produced.
pub fn sort_accumulate_into<L: ColIndex, V: Payload>(
    cols: &[L],
    vals: &[V],
    scratch: &mut SortScratch<L>,
    out: impl FnMut(L, V),
) -> usize {
    debug_assert_eq!(cols.len(), vals.len());
    scratch.sort_keys(cols);
    if scratch.use_packed {
        let p = &scratch.packed;
        merge_sorted(p.len(), |k| (L::from_usize((p[k] >> 32) as usize), p[k] as u32), vals, out)
    } else {
        let keys = &scratch.keys;
        merge_sorted(keys.len(), |k| keys[k], vals, out)
    }
}

/// Symbolic sort path: number of distinct indices.
pub fn sort_count_distinct<L: ColIndex>(cols: &[L], scratch: &mut SortScratch<L>) -> usize {
    if cols.is_empty() {
        return 0;
    }
    scratch.sort_keys(cols);
    if scratch.use_packed {
        1 + scratch.packed.windows(2).filter(|w| w[0] >> 32 != w[1] >> 32).count()
    } else {
        1 + scratch.keys.windows(2).filter(|w| w[0].0 != w[1].0).count()
    }
}

/// Sorts by column and merges duplicates. Output columns strictly increase;
/// duplicates are summed in ascending input position.
pub fn sort_accumulate<L: ColIndex>(cols: &[L], vals: &[f64]) -> (Vec<L>, Vec<f64>) {
    let mut scratch = SortScratch::new();
    let mut out_cols = Vec::new();
    let mut out_vals = Vec::new();
    sort_accumulate_into(cols, vals, &mut scratch, |c, v| {
        out_cols.push(c);
        out_vals.push(v);
    });
    (out_cols, out_vals)
}
