//! Coarse-level reordering for rows whose fine-level working set would not
//! fit in L2.
//!
//! A batch of rows is expanded as an outer product: the batch's rows of `A`
//! are converted to CSC and every touched row of `B` is read once for the
//! whole batch. Products are bucketed into (row, coarse chunk) segments;
//! each segment is then handed to the fine level.

use alloc::vec::Vec;

use super::fine::{fine_level_chunk, FineWorkspace, RowSink};
use super::plan::{ChunkPlan, SystemParams};
use crate::accum::AccumThresholds;
use crate::csc::{csr_rows_to_csc_into, CscSubMatrix};
use crate::csr::CsrMatrix;
use crate::error::{Error, Result};
use crate::gustavson::RowStats;
use crate::index::{ColIndex, Payload};

/// Splits `coarse_rows` into consecutive batches.
///
/// A batch is closed before adding a row when its buffered intermediate
/// product would exceed `memory_budget_bytes`, or when its per-row chunk
/// metadata would no longer fit in L2. A single row is always accepted on
/// the metadata rule; a single row over the memory budget is an error.
pub fn build_coarse_batches(
    coarse_rows: &[usize],
    stats: &[RowStats],
    plan: &ChunkPlan,
    sys: &SystemParams,
    element_bytes: usize,
) -> Result<Vec<Vec<usize>>> {
    let budget = sys.memory_budget_bytes as u128;
    let meta_per_row = (plan.n_chunks_coarse as u128) * (plan.s_chunk_fine as u128);
    let mut batches = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut buffered: u128 = 0;
    for &row in coarse_rows {
        let bytes = stats[row].inter_size as u128 * element_bytes as u128;
        if bytes > budget {
            return Err(Error::OverBudget {
                row,
                bytes: bytes.min(u64::MAX as u128) as u64,
                budget: sys.memory_budget_bytes,
            });
        }
        let over_budget = buffered + bytes > budget;
        let over_l2 = (current.len() as u128 + 1) * meta_per_row > sys.l2_bytes as u128;
        if !current.is_empty() && (over_budget || over_l2) {
            batches.push(core::mem::take(&mut current));
            buffered = 0;
        }
        current.push(row);
        buffered += bytes;
    }
    if !current.is_empty() {
        batches.push(current);
    }
    Ok(batches)
}

/// Per-worker scratch for coarse-level batches.
#[derive(Clone, Debug, Default)]
pub struct CoarseWorkspace<I, V> {
    touched_b: Vec<bool>,
    rows_b: Vec<usize>,
    csc: CscSubMatrix,
    counts: Vec<usize>,
    offsets: Vec<usize>,
    col_coarse: Vec<I>,
    val_coarse: Vec<V>,
}

impl<I: ColIndex, V: Payload> CoarseWorkspace<I, V> {
    pub fn new() -> Self {
        Self {
            touched_b: Vec::new(),
            rows_b: Vec::new(),
            csc: CscSubMatrix::default(),
            counts: Vec::new(),
            offsets: Vec::new(),
            col_coarse: Vec::new(),
            val_coarse: Vec::new(),
        }
    }

    /// Rows of `B` read by the last batch, ascending.
    pub fn rows_b(&self) -> &[usize] {
        &self.rows_b
    }

    /// Segment boundaries of the last batch: segment `r·n_chunks + c` holds
    /// row `r`'s products in coarse chunk `c`.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Columns relative to their coarse chunk, after the last reorder.
    pub fn reordered_cols(&self) -> &[I] {
        &self.col_coarse
    }

    pub fn reordered_vals(&self) -> &[V] {
        &self.val_coarse
    }
}

/// Outer-product expansion and coarse reorder of one batch.
///
/// Within a segment, elements keep the order in which a row-by-row
/// expansion would generate them when `A` is canonical.
pub fn coarse_reorder<I: ColIndex, V: Payload>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    batch: &[usize],
    plan: &ChunkPlan,
    ws: &mut CoarseWorkspace<I, V>,
) {
    let n_chunks = plan.n_chunks_coarse;
    let shift = plan.shift_coarse;

    ws.touched_b.resize(b.n_rows(), false);
    ws.rows_b.clear();
    for &i in batch {
        for &j in a.row_cols(i) {
            let j = j.to_usize();
            if !ws.touched_b[j] {
                ws.touched_b[j] = true;
                ws.rows_b.push(j);
            }
        }
    }
    ws.rows_b.sort_unstable();
    for &j in &ws.rows_b {
        ws.touched_b[j] = false;
    }

    csr_rows_to_csc_into(a, batch, &mut ws.csc);

    let segments = batch.len() * n_chunks;
    ws.counts.clear();
    ws.counts.resize(segments, 0);
    for &j in &ws.rows_b {
        for e in ws.csc.col_range(j) {
            let r = ws.csc.row[e] as usize;
            for &k in b.row_cols(j) {
                ws.counts[r * n_chunks + (k.to_usize() >> shift)] += 1;
            }
        }
    }

    ws.offsets.clear();
    ws.offsets.reserve(segments + 1);
    ws.offsets.push(0);
    let mut acc = 0usize;
    for &c in &ws.counts {
        acc += c;
        ws.offsets.push(acc);
    }

    ws.col_coarse.resize(acc, I::default());
    ws.val_coarse.resize(acc, V::default());
    ws.counts.fill(0);
    let mask = plan.chunk_len_coarse - 1;
    for &j in &ws.rows_b {
        let (bc, bv) = (b.row_cols(j), b.row_vals(j));
        for e in ws.csc.col_range(j) {
            let r = ws.csc.row[e] as usize;
            let av = ws.csc.val[e];
            let seg0 = r * n_chunks;
            for (&k, &bvk) in bc.iter().zip(bv) {
                let k = k.to_usize();
                let seg = seg0 + (k >> shift);
                let slot = ws.offsets[seg] + ws.counts[seg];
                ws.counts[seg] += 1;
                ws.col_coarse[slot] = I::from_usize(k & mask);
                if V::NUMERIC {
                    ws.val_coarse[slot] = V::product(av, bvk);
                }
            }
        }
    }
}

/// Runs one batch: coarse reorder, then the fine level on every non-empty
/// (row, coarse chunk) segment. `sinks[r]` receives row `batch[r]`.
#[allow(clippy::too_many_arguments)]
pub fn coarse_level_batch<I: ColIndex, V: Payload, S: RowSink<V>>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    batch: &[usize],
    plan: &ChunkPlan,
    thresholds: &AccumThresholds,
    ws: &mut CoarseWorkspace<I, V>,
    fine_ws: &mut FineWorkspace<V>,
    sinks: &mut [S],
) {
    assert_eq!(batch.len(), sinks.len());
    coarse_reorder(a, b, batch, plan, ws);
    let fine = plan.fine();
    let n_chunks = plan.n_chunks_coarse;
    for (r, sink) in sinks.iter_mut().enumerate() {
        for chunk in 0..n_chunks {
            let seg = r * n_chunks + chunk;
            let span = ws.offsets[seg]..ws.offsets[seg + 1];
            if span.is_empty() {
                continue;
            }
            fine_level_chunk(
                &ws.col_coarse[span.clone()],
                &ws.val_coarse[span],
                &fine,
                chunk * plan.chunk_len_coarse,
                thresholds,
                fine_ws,
                sink,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csr::csr_from_triplets;
    use crate::index::Phase;
    use crate::magnus::plan::compute_chunk_plan;
    use alloc::vec;

    fn stats(inter: u64) -> RowStats {
        RowStats {
            inter_size: inter,
            min_col: 0,
            max_col: 1,
        }
    }

    fn toy_plan(n_chunks_coarse: usize) -> (ChunkPlan, SystemParams) {
        let sys = SystemParams {
            l2_bytes: 1000,
            memory_budget_bytes: 100,
            ..SystemParams::default()
        };
        let mut plan = compute_chunk_plan(&sys, 1 << 20, Phase::Numeric);
        plan.n_chunks_coarse = n_chunks_coarse;
        (plan, sys)
    }

    #[test]
    fn batches_close_on_budget() {
        let (plan, sys) = toy_plan(1);
        let st = vec![stats(4), stats(4), stats(2), stats(1)];
        // 10 bytes per element: 40 + 40 + 20 = 100 fits, the next does not.
        let batches = build_coarse_batches(&[0, 1, 2, 3], &st, &plan, &sys, 10).unwrap();
        assert_eq!(batches, vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn batches_close_on_l2_metadata() {
        let (plan, sys) = toy_plan(3);
        // 3 * 136 = 408 bytes per row: two rows fit in 1000, three do not.
        let st = vec![stats(1); 5];
        let batches = build_coarse_batches(&[0, 1, 2, 3, 4], &st, &plan, &sys, 1).unwrap();
        assert_eq!(batches, vec![vec![0, 1], vec![2, 3], vec![4]]);

        let (plan, sys) = toy_plan(100);
        let batches = build_coarse_batches(&[0, 1], &st, &plan, &sys, 1).unwrap();
        assert_eq!(batches, vec![vec![0], vec![1]]);
    }

    #[test]
    fn single_row_over_budget_is_an_error() {
        let (plan, sys) = toy_plan(1);
        let err = build_coarse_batches(&[0], &[stats(11)], &plan, &sys, 10).unwrap_err();
        assert!(matches!(err, Error::OverBudget { row: 0, bytes: 110, budget: 100 }));
        assert!(build_coarse_batches(&[], &[], &plan, &sys, 10).unwrap().is_empty());
    }

    #[test]
    fn reorder_segments_follow_row_then_chunk() {
        // Two coarse chunks of 4 columns, fine chunks of 2.
        let plan = ChunkPlan::manual(Phase::Numeric, 8, 2, 2);
        let a = csr_from_triplets::<u32>(&[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)], 2, 2).unwrap();
        let b = csr_from_triplets::<u32>(&[(0, 1, 1.0), (0, 6, 1.0), (1, 2, 1.0), (1, 5, 1.0)], 2, 8).unwrap();
        let mut ws = CoarseWorkspace::<u32, f64>::new();
        coarse_reorder(&a, &b, &[0, 1], &plan, &mut ws);
        assert_eq!(ws.rows_b(), [0, 1]);
        assert_eq!(ws.offsets(), [0, 2, 4, 5, 6]);
        assert_eq!(ws.reordered_cols(), [1, 2, 2, 1, 2, 1]);
        assert_eq!(ws.reordered_vals(), [1.0, 2.0, 1.0, 2.0, 3.0, 3.0]);

        let mut sinks = vec![Vec::new(), Vec::new()];
        let mut fine_ws = FineWorkspace::new();
        coarse_level_batch(&a, &b, &[0, 1], &plan, &AccumThresholds::default(), &mut ws, &mut fine_ws, &mut sinks);
        assert_eq!(sinks[0], vec![(1, 1.0), (2, 2.0), (5, 2.0), (6, 1.0)]);
        assert_eq!(sinks[1], vec![(2, 3.0), (5, 3.0)]);
    }
}
