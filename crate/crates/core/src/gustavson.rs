//! Row-by-row (Gustavson) SpGEMM baselines and the dense reference oracle.
//!
//! `C_i = Σ_{j ∈ S(A_i)} A_ij · B_j`: for each row of `A` the selected rows of
//! `B` are scaled and accumulated, either into a dense accumulator
//! ([`gustavson_dense_numeric`]) or by materializing the row's intermediate
//! product and sort-merging it ([`gustavson_esc_numeric`]). Both take the
//! exact row pointer from a separate symbolic pass.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::accum::{sort_accumulate_into, sort_count_distinct, DenseAccumulator, SortScratch};
use crate::csr::CsrMatrix;
use crate::error::{Error, Result};
use crate::exec::{for_each_with, map_range};
use crate::index::ColIndex;
use crate::product::{
    alloc_output, canonicalize_rows, check_dims, check_row_ptr, counter, counts_to_row_ptr, finish_timings,
    phase, row_bounds, row_writers, SpgemmResult,
};
use crate::timer::Stopwatch;

/// Widest `B` accepted by [`spgemm_reference`].
pub const REFERENCE_MAX_COLS: usize = 1 << 16;

/// Direct evaluation of `A·B` with a dense scratch row drained in column
/// order. Test-scale oracle for every other algorithm.
pub fn spgemm_reference<I: ColIndex>(a: &CsrMatrix<I>, b: &CsrMatrix<I>) -> Result<CsrMatrix<I>> {
    check_dims(a, b)?;
    let m = b.n_cols();
    if m > REFERENCE_MAX_COLS {
        return Err(Error::InvalidParams(alloc::format!(
            "reference product supports at most {REFERENCE_MAX_COLS} columns, B has {m}"
        )));
    }
    let mut row_ptr = vec![0usize];
    let mut col = Vec::new();
    let mut val = Vec::new();
    let mut dense = vec![0.0f64; m];
    let mut touched = vec![false; m];
    for i in 0..a.n_rows() {
        for (&j, &av) in a.row_cols(i).iter().zip(a.row_vals(i)) {
            let j = j.to_usize();
            for (&k, &bv) in b.row_cols(j).iter().zip(b.row_vals(j)) {
                let k = k.to_usize();
                if touched[k] {
                    dense[k] += av * bv;
                } else {
                    touched[k] = true;
                    dense[k] = av * bv;
                }
            }
        }
        for k in 0..m {
            if touched[k] {
                col.push(I::from_usize(k));
                val.push(dense[k]);
                touched[k] = false;
            }
        }
        row_ptr.push(col.len());
    }
    Ok(CsrMatrix::from_parts_unchecked(a.n_rows(), m, row_ptr, col, val, true))
}

/// Intermediate-product size and column span of one row of `C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowStats {
    pub inter_size: u64,
    /// Smallest column touched; meaningful only when `inter_size > 0`.
    pub min_col: usize,
    /// Largest column touched; meaningful only when `inter_size > 0`.
    pub max_col: usize,
}

impl RowStats {
    pub const EMPTY: Self = Self {
        inter_size: 0,
        min_col: usize::MAX,
        max_col: 0,
    };

    pub fn is_empty(&self) -> bool {
        self.inter_size == 0
    }

    /// `max_col - min_col + 1`, or 0 for an empty row.
    pub fn span(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            self.max_col - self.min_col + 1
        }
    }
}

/// Per-row statistics of the intermediate product, computed from row
/// lengths and column bounds of `B` without forming any product.
pub fn row_intermediate_stats<I: ColIndex>(a: &CsrMatrix<I>, b: &CsrMatrix<I>, parallel: bool) -> Result<Vec<RowStats>> {
    check_dims(a, b)?;
    let bounds = row_bounds(b, parallel);
    Ok(map_range(a.n_rows(), parallel, |i| {
        let mut s = RowStats::EMPTY;
        for &j in a.row_cols(i) {
            let j = j.to_usize();
            if let Some((lo, hi)) = bounds[j] {
                s.inter_size += b.row_nnz(j) as u64;
                s.min_col = s.min_col.min(lo);
                s.max_col = s.max_col.max(hi);
            }
        }
        s
    }))
}

/// Precise prediction with a dense bitmap: exact nnz of every row of `C`,
/// returned as a row pointer.
pub fn gustavson_dense_symbolic<I: ColIndex>(a: &CsrMatrix<I>, b: &CsrMatrix<I>, parallel: bool) -> Result<Vec<usize>> {
    check_dims(a, b)?;
    let m = b.n_cols();
    let counts = {
        let rows: Vec<usize> = (0..a.n_rows()).collect();
        let mut out = vec![0usize; a.n_rows()];
        let slots: Vec<(usize, &mut usize)> = rows.into_iter().zip(out.iter_mut()).collect();
        for_each_with(
            slots,
            parallel,
            || DenseAccumulator::<I, ()>::new(m),
            |acc, (i, slot)| -> Result<()> {
                let mut count = 0;
                for &j in a.row_cols(i) {
                    for &k in b.row_cols(j.to_usize()) {
                        count += acc.mark(k) as usize;
                    }
                }
                for &j in a.row_cols(i) {
                    for &k in b.row_cols(j.to_usize()) {
                        acc.unmark(k);
                    }
                }
                *slot = count;
                Ok(())
            },
        )?;
        out
    };
    Ok(counts_to_row_ptr(&counts))
}

/// Precise prediction by expanding each row and counting distinct columns
/// after a sort.
pub fn esc_symbolic<I: ColIndex>(a: &CsrMatrix<I>, b: &CsrMatrix<I>, parallel: bool) -> Result<Vec<usize>> {
    check_dims(a, b)?;
    let mut counts = vec![0usize; a.n_rows()];
    let slots: Vec<(usize, &mut usize)> = counts.iter_mut().enumerate().collect();
    for_each_with(
        slots,
        parallel,
        || (Vec::<I>::new(), SortScratch::<I>::new()),
        |(buf, scratch), (i, slot)| -> Result<()> {
            buf.clear();
            for &j in a.row_cols(i) {
                buf.extend_from_slice(b.row_cols(j.to_usize()));
            }
            *slot = sort_count_distinct(buf, scratch);
            Ok(())
        },
    )?;
    Ok(counts_to_row_ptr(&counts))
}

/// Numeric phase with a dense accumulator of length `m_C`.
///
/// Rows are written in first-insertion order and then canonicalized in a
/// separately timed pass.
pub fn gustavson_dense_numeric<I: ColIndex>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    row_ptr: &[usize],
    parallel: bool,
) -> Result<SpgemmResult<I>> {
    check_dims(a, b)?;
    check_row_ptr(row_ptr, a.n_rows())?;
    let m = b.n_cols();
    let clock = Stopwatch::start();
    let (mut col, mut val) = alloc_output::<I>(row_ptr);
    let writers = row_writers(row_ptr, &mut col, &mut val);
    let items: Vec<_> = writers.into_iter().enumerate().collect();
    for_each_with(
        items,
        parallel,
        || DenseAccumulator::<I, f64>::new(m),
        |acc, (i, mut w)| {
            for (&j, &av) in a.row_cols(i).iter().zip(a.row_vals(i)) {
                let j = j.to_usize();
                for (&k, &bv) in b.row_cols(j).iter().zip(b.row_vals(j)) {
                    acc.insert(k, av * bv);
                }
            }
            acc.drain(|c, v| w.push(c, v));
            w.finish(i)
        },
    )?;
    let numeric = clock.seconds();
    finish_baseline(a, b, row_ptr, col, val, numeric, parallel)
}

/// Expand-sort-compress numeric phase: each row's intermediate product is
/// buffered and sort-merged.
pub fn gustavson_esc_numeric<I: ColIndex>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    row_ptr: &[usize],
    parallel: bool,
) -> Result<SpgemmResult<I>> {
    check_dims(a, b)?;
    check_row_ptr(row_ptr, a.n_rows())?;
    let clock = Stopwatch::start();
    let (mut col, mut val) = alloc_output::<I>(row_ptr);
    let writers = row_writers(row_ptr, &mut col, &mut val);
    let buffered: Vec<usize> = {
        let mut per_row = vec![0usize; a.n_rows()];
        let items: Vec<_> = writers.into_iter().zip(per_row.iter_mut()).enumerate().collect();
        for_each_with(
            items,
            parallel,
            || (Vec::<I>::new(), Vec::<f64>::new(), SortScratch::<I>::new()),
            |(cbuf, vbuf, scratch), (i, (mut w, used))| {
                cbuf.clear();
                vbuf.clear();
                for (&j, &av) in a.row_cols(i).iter().zip(a.row_vals(i)) {
                    let j = j.to_usize();
                    cbuf.extend_from_slice(b.row_cols(j));
                    vbuf.extend(b.row_vals(j).iter().map(|&bv| av * bv));
                }
                *used = cbuf.len();
                sort_accumulate_into(cbuf, vbuf, scratch, |c, v| w.push(c, v));
                w.finish(i)
            },
        )?;
        per_row
    };
    let numeric = clock.seconds();
    let mut result = finish_baseline(a, b, row_ptr, col, val, numeric, parallel)?;
    result
        .counters
        .insert(counter::ESC_BUFFER_ELEMENTS, buffered.iter().sum::<usize>() as u64);
    result
        .counters
        .insert(counter::ESC_MAX_ROW_BUFFER, buffered.iter().copied().max().unwrap_or(0) as u64);
    Ok(result)
}

fn finish_baseline<I: ColIndex>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    row_ptr: &[usize],
    mut col: Vec<I>,
    mut val: Vec<f64>,
    numeric_secs: f64,
    parallel: bool,
) -> Result<SpgemmResult<I>> {
    let clock = Stopwatch::start();
    canonicalize_rows(row_ptr, &mut col, &mut val, parallel);
    let canon = clock.seconds();
    let inter: u64 = a.col().iter().map(|&j| b.row_nnz(j.to_usize()) as u64).sum();
    let c = CsrMatrix::from_parts_unchecked(a.n_rows(), b.n_cols(), row_ptr.to_vec(), col, val, true);
    let mut timings = BTreeMap::new();
    timings.insert(phase::NUMERIC, numeric_secs);
    timings.insert(phase::CANONICALIZE, canon);
    let mut counters = BTreeMap::new();
    counters.insert(counter::INTER_PROD_SIZE, inter);
    counters.insert(counter::NNZ_C, c.nnz() as u64);
    Ok(SpgemmResult { c, timings, counters })
}

/// Which baseline accumulation to run in [`spgemm_gustavson`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    Dense,
    Esc,
}

/// Symbolic then numeric pass of a Gustavson baseline, with timings.
pub fn spgemm_gustavson<I: ColIndex>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    baseline: Baseline,
    parallel: bool,
) -> Result<SpgemmResult<I>> {
    let clock = Stopwatch::start();
    let row_ptr = match baseline {
        Baseline::Dense => gustavson_dense_symbolic(a, b, parallel)?,
        Baseline::Esc => esc_symbolic(a, b, parallel)?,
    };
    let symbolic = clock.seconds();
    let mut result = match baseline {
        Baseline::Dense => gustavson_dense_numeric(a, b, &row_ptr, parallel)?,
        Baseline::Esc => gustavson_esc_numeric(a, b, &row_ptr, parallel)?,
    };
    result.timings.insert(phase::SYMBOLIC, symbolic);
    result.timings.insert(phase::SETUP, 0.0);
    finish_timings(&mut result.timings);
    Ok(result)
}
