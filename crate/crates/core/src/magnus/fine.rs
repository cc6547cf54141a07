//! Fine-level reordering: bucket an intermediate product into column chunks
//! small enough for L2, then accumulate each chunk on its own.

use alloc::vec::Vec;

use super::plan::FineParams;
use crate::accum::{merge_chunks_into, select_accumulator, AccumKind, AccumThresholds, DenseAccumulator, SortScratch};
use crate::accum::{sort_accumulate_into, sort_count_distinct};
use crate::csr::CsrMatrix;
use crate::index::{ColIndex, Payload};

/// Receives the accumulated entries of one row of `C`.
///
/// Numeric runs call `push` once per output entry. Symbolic runs may call
/// `push` or report a whole count through `add_count`.
pub trait RowSink<V> {
    /// Marks the start of output coming from one accumulation group whose
    /// columns begin at `base`.
    #[inline(always)]
    fn begin_group(&mut self, _base: usize) {}

    fn push(&mut self, col: usize, val: V);

    fn add_count(&mut self, n: usize);
}

/// Counts entries only.
impl<V> RowSink<V> for usize {
    #[inline(always)]
    fn push(&mut self, _: usize, _: V) {
        *self += 1;
    }

    #[inline(always)]
    fn add_count(&mut self, n: usize) {
        *self += n;
    }
}

/// Collects `(col, val)` pairs; `add_count` is not meaningful here.
impl<V> RowSink<V> for Vec<(usize, V)> {
    fn push(&mut self, col: usize, val: V) {
        Vec::push(self, (col, val));
    }

    fn add_count(&mut self, _: usize) {
        unreachable!("numeric sink received a symbolic count")
    }
}

/// Source of an intermediate product in generation order.
pub trait ProductStream<V> {
    fn len_hint(&self) -> usize;

    fn for_each(&self, f: impl FnMut(usize, V));
}

/// An already materialized stream.
pub struct Materialized<'a, L, V> {
    pub cols: &'a [L],
    pub vals: &'a [V],
}

impl<L: ColIndex, V: Payload> ProductStream<V> for Materialized<'_, L, V> {
    fn len_hint(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    fn for_each(&self, mut f: impl FnMut(usize, V)) {
        for (&c, &v) in self.cols.iter().zip(self.vals) {
            f(c.to_usize(), v);
        }
    }
}

/// Row `i` of `A·B`, generated row by row from `B`.
pub struct RowProduct<'a, I> {
    pub a: &'a CsrMatrix<I>,
    pub b: &'a CsrMatrix<I>,
    pub row: usize,
}

impl<I: ColIndex, V: Payload> ProductStream<V> for RowProduct<'_, I> {
    fn len_hint(&self) -> usize {
        0
    }

    #[inline]
    fn for_each(&self, mut f: impl FnMut(usize, V)) {
        let (a, b) = (self.a, self.b);
        for (&j, &av) in a.row_cols(self.row).iter().zip(a.row_vals(self.row)) {
            let j = j.to_usize();
            for (&k, &bv) in b.row_cols(j).iter().zip(b.row_vals(j)) {
                f(k.to_usize(), V::product(av, bv));
            }
        }
    }
}

/// Per-worker scratch for the fine level. Sized lazily and reused across
/// rows and chunks.
#[derive(Clone, Debug, Default)]
pub struct FineWorkspace<V> {
    counts: Vec<u32>,
    offsets: Vec<u32>,
    col_fine: Vec<u32>,
    val_fine: Vec<V>,
    group_cols: Vec<u64>,
    dense: DenseAccumulator<u32, V>,
    sort: SortScratch<u64>,
}

impl<V: Payload> FineWorkspace<V> {
    pub fn new() -> Self {
        Self {
            counts: Vec::new(),
            offsets: Vec::new(),
            col_fine: Vec::new(),
            val_fine: Vec::new(),
            group_cols: Vec::new(),
            dense: DenseAccumulator::new(0),
            sort: SortScratch::new(),
        }
    }

    /// Elements per fine chunk after the last reorder.
    pub fn histogram(&self) -> &[u32] {
        &self.counts
    }

    /// Start of each chunk in the reordered arrays, with the total last.
    pub fn offsets(&self) -> &[u32] {
        &self.offsets
    }

    /// Chunk-local column indices after the last reorder.
    pub fn reordered_cols(&self) -> &[u32] {
        &self.col_fine
    }

    pub fn reordered_vals(&self) -> &[V] {
        &self.val_fine
    }
}

/// Histogram, prefix sum and stable reorder of `stream` into fine chunks.
///
/// Columns must lie in `[0, fine.range())`. Afterwards chunk `c` occupies
/// `offsets[c]..offsets[c + 1]` of the reordered arrays, holds columns
/// minus `c·chunk_len` and keeps the generation order of its elements.
pub fn fine_reorder<V: Payload, P: ProductStream<V>>(stream: &P, fine: &FineParams, ws: &mut FineWorkspace<V>) {
    let shift = fine.shift;
    let n = fine.n_chunks;
    ws.counts.clear();
    ws.counts.resize(n, 0);
    let counts = &mut ws.counts;
    let mut total = 0usize;
    stream.for_each(|c, _| {
        counts[c >> shift] += 1;
        total += 1;
    });
    assert!(total < u32::MAX as usize, "fine-level stream too long for 32-bit offsets");

    ws.offsets.clear();
    ws.offsets.reserve(n + 1);
    ws.offsets.push(0);
    let mut acc = 0u32;
    for &c in ws.counts.iter() {
        acc += c;
        ws.offsets.push(acc);
    }

    ws.col_fine.resize(total, 0);
    ws.val_fine.resize(total, V::default());
    // Reuse the histogram as per-chunk fill counters; it ends up equal to
    // the histogram again.
    ws.counts.fill(0);
    let (counts, offsets) = (&mut ws.counts, &ws.offsets);
    let (col_fine, val_fine) = (&mut ws.col_fine, &mut ws.val_fine);
    let mask = fine.chunk_len - 1;
    stream.for_each(|c, v| {
        let chunk = c >> shift;
        let slot = (offsets[chunk] + counts[chunk]) as usize;
        counts[chunk] += 1;
        col_fine[slot] = (c & mask) as u32;
        if V::NUMERIC {
            val_fine[slot] = v;
        }
    });
}

/// Accumulates the chunks laid out by [`fine_reorder`]. Global output
/// columns are `base + chunk·chunk_len + local`.
///
/// Chunks with at least `sort_dense_crossover` elements use a dense
/// accumulator of `chunk_len` slots. Runs of smaller chunks are merged into
/// groups of about `sort_sweet_spot` elements and sorted together.
pub fn fine_accumulate<V: Payload, S: RowSink<V>>(
    fine: &FineParams,
    base: usize,
    thresholds: &AccumThresholds,
    ws: &mut FineWorkspace<V>,
    sink: &mut S,
) {
    let n = fine.n_chunks;
    let mut run_start = 0;
    for chunk in 0..=n {
        let dense = chunk < n && select_accumulator(ws.counts[chunk] as usize, thresholds) == AccumKind::Dense;
        if chunk < n && !dense {
            continue;
        }
        if run_start < chunk {
            sort_run(fine, base, run_start..chunk, thresholds, ws, sink);
        }
        if dense {
            dense_chunk(fine, base, chunk, ws, sink);
        }
        run_start = chunk + 1;
    }
}

fn sort_run<V: Payload, S: RowSink<V>>(
    fine: &FineParams,
    base: usize,
    run: core::ops::Range<usize>,
    thresholds: &AccumThresholds,
    ws: &mut FineWorkspace<V>,
    sink: &mut S,
) {
    let FineWorkspace {
        counts,
        offsets,
        col_fine,
        val_fine,
        group_cols,
        sort,
        ..
    } = ws;
    let sizes: Vec<usize> = counts[run.clone()].iter().map(|&c| c as usize).collect();
    merge_chunks_into(&sizes, thresholds.sort_sweet_spot, |g| {
        let (first, last) = (run.start + g.start, run.start + g.end);
        let span = offsets[first] as usize..offsets[last] as usize;
        if span.is_empty() {
            return;
        }
        // Columns relative to the group's first chunk so that the merged
        // chunks sort as one range.
        group_cols.clear();
        for chunk in first..last {
            let rel = ((chunk - first) * fine.chunk_len) as u64;
            let r = offsets[chunk] as usize..offsets[chunk + 1] as usize;
            group_cols.extend(col_fine[r].iter().map(|&c| rel + c as u64));
        }
        let group_base = base + first * fine.chunk_len;
        sink.begin_group(group_base);
        if V::NUMERIC {
            sort_accumulate_into(group_cols, &val_fine[span], sort, |c, v| {
                sink.push(group_base + c as usize, v)
            });
        } else {
            sink.add_count(sort_count_distinct(group_cols, sort));
        }
    });
}

fn dense_chunk<V: Payload, S: RowSink<V>>(
    fine: &FineParams,
    base: usize,
    chunk: usize,
    ws: &mut FineWorkspace<V>,
    sink: &mut S,
) {
    let r = ws.offsets[chunk] as usize..ws.offsets[chunk + 1] as usize;
    ws.dense.reserve_capacity(fine.chunk_len);
    let chunk_base = base + chunk * fine.chunk_len;
    sink.begin_group(chunk_base);
    if V::NUMERIC {
        ws.dense.scatter(&ws.col_fine[r.clone()], &ws.val_fine[r]);
        ws.dense.drain(|c, v| sink.push(chunk_base + c as usize, v));
    } else {
        sink.add_count(ws.dense.count_distinct(&ws.col_fine[r]));
    }
}

/// Fine level over a materialized stream whose columns lie in
/// `[0, fine.range())`; outputs are shifted by `base`.
pub fn fine_level_chunk<L: ColIndex, V: Payload, S: RowSink<V>>(
    cols: &[L],
    vals: &[V],
    fine: &FineParams,
    base: usize,
    thresholds: &AccumThresholds,
    ws: &mut FineWorkspace<V>,
    sink: &mut S,
) {
    debug_assert_eq!(cols.len(), vals.len());
    fine_reorder(&Materialized { cols, vals }, fine, ws);
    fine_accumulate(fine, base, thresholds, ws, sink);
}

/// Fine level applied directly to row `row` of `A·B`, reading `B` twice
/// (once for the histogram, once for the reorder).
pub fn fine_level_row<I: ColIndex, V: Payload, S: RowSink<V>>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    row: usize,
    fine: &FineParams,
    thresholds: &AccumThresholds,
    ws: &mut FineWorkspace<V>,
    sink: &mut S,
) {
    debug_assert!(b.n_cols() <= fine.range());
    fine_reorder(&RowProduct { a, b, row }, fine, ws);
    fine_accumulate(fine, 0, thresholds, ws, sink);
}
