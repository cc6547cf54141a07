//! Pieces shared by every SpGEMM driver: result type, dimension and row
//! pointer checks, output allocation and row canonicalization.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::csr::{check_width, sort_row_pairs, CsrMatrix};
use crate::error::{Error, Result};
use crate::exec::{for_each_with, map_range, split_rows};
use crate::index::ColIndex;

/// Output of an SpGEMM run together with phase timings and counters.
#[derive(Clone, Debug)]
pub struct SpgemmResult<I = u32> {
    pub c: CsrMatrix<I>,
    /// Seconds per phase. `total` covers setup, symbolic and numeric;
    /// `canonicalize` is reported on its own.
    pub timings: BTreeMap<&'static str, f64>,
    pub counters: BTreeMap<&'static str, u64>,
}

impl<I> SpgemmResult<I> {
    pub fn timing(&self, phase: &str) -> f64 {
        self.timings.get(phase).copied().unwrap_or(0.0)
    }

    pub fn counter(&self, name: &str) -> u64 {
        self.counters.get(name).copied().unwrap_or(0)
    }
}

pub mod counter {
    pub const INTER_PROD_SIZE: &str = "inter_prod_size";
    pub const NNZ_C: &str = "nnz_c";
    pub const ESC_BUFFER_ELEMENTS: &str = "esc_buffer_elements";
    pub const ESC_MAX_ROW_BUFFER: &str = "esc_max_row_buffer";
    pub const ROWS_SORT: &str = "rows_sort";
    pub const ROWS_DENSE: &str = "rows_dense";
    pub const ROWS_FINE: &str = "rows_fine";
    pub const ROWS_COARSE: &str = "rows_coarse";
    pub const COARSE_BATCHES: &str = "coarse_batches";
    pub const USE_COARSE: &str = "use_coarse";
}

pub mod phase {
    pub const SETUP: &str = "setup";
    pub const SYMBOLIC: &str = "symbolic";
    pub const NUMERIC: &str = "numeric";
    pub const CANONICALIZE: &str = "canonicalize";
    pub const TOTAL: &str = "total";
}

pub(crate) fn check_dims<I: ColIndex>(a: &CsrMatrix<I>, b: &CsrMatrix<I>) -> Result<()> {
    if a.n_cols() != b.n_rows() {
        return Err(Error::DimensionMismatch {
            a_rows: a.n_rows(),
            a_cols: a.n_cols(),
            b_rows: b.n_rows(),
            b_cols: b.n_cols(),
        });
    }
    check_width::<I>(b.n_cols())
}

/// Checks that `row_ptr` is a well-formed prefix sum for `n_rows` rows.
pub(crate) fn check_row_ptr(row_ptr: &[usize], n_rows: usize) -> Result<()> {
    if row_ptr.len() != n_rows + 1 {
        return Err(Error::RowPtrMismatch {
            row: row_ptr.len().min(n_rows),
        });
    }
    if row_ptr[0] != 0 {
        return Err(Error::RowPtrMismatch { row: 0 });
    }
    if let Some(i) = row_ptr.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::RowPtrMismatch { row: i });
    }
    Ok(())
}

/// Exclusive prefix sum of per-row counts.
pub fn counts_to_row_ptr(counts: &[usize]) -> Vec<usize> {
    let mut row_ptr = Vec::with_capacity(counts.len() + 1);
    row_ptr.push(0);
    let mut acc = 0usize;
    for &c in counts {
        acc += c;
        row_ptr.push(acc);
    }
    row_ptr
}

/// Output arrays sized by `row_ptr`.
pub(crate) fn alloc_output<I: ColIndex>(row_ptr: &[usize]) -> (Vec<I>, Vec<f64>) {
    let nnz = *row_ptr.last().unwrap_or(&0);
    (vec![I::default(); nnz], vec![0.0; nnz])
}

/// Per-row writer that reports a row pointer mismatch instead of
/// overrunning its slice.
pub(crate) struct RowWriter<'a, I> {
    cols: &'a mut [I],
    vals: &'a mut [f64],
    pos: usize,
}

impl<'a, I: ColIndex> RowWriter<'a, I> {
    pub(crate) fn new(cols: &'a mut [I], vals: &'a mut [f64]) -> Self {
        Self { cols, vals, pos: 0 }
    }

    #[inline(always)]
    pub(crate) fn push(&mut self, col: I, val: f64) {
        if self.pos < self.cols.len() {
            self.cols[self.pos] = col;
            self.vals[self.pos] = val;
        }
        self.pos += 1;
    }

    pub(crate) fn finish(self, row: usize) -> Result<()> {
        if self.pos == self.cols.len() {
            Ok(())
        } else {
            Err(Error::RowPtrMismatch { row })
        }
    }
}

/// One writer per row of the output.
pub(crate) fn row_writers<'a, I: ColIndex>(
    row_ptr: &[usize],
    cols: &'a mut [I],
    vals: &'a mut [f64],
) -> Vec<RowWriter<'a, I>> {
    split_rows(row_ptr, cols)
        .into_iter()
        .zip(split_rows(row_ptr, vals))
        .map(|(c, v)| RowWriter::new(c, v))
        .collect()
}

/// Sorts every row of `(cols, vals)` by column in place.
pub(crate) fn canonicalize_rows<I: ColIndex>(row_ptr: &[usize], cols: &mut [I], vals: &mut [f64], parallel: bool) {
    let rows: Vec<_> = split_rows(row_ptr, cols)
        .into_iter()
        .zip(split_rows(row_ptr, vals))
        .collect();
    let _ = for_each_with(rows, parallel, Vec::new, |scratch, (c, v)| -> Result<()> {
        sort_row_pairs(c, v, scratch);
        Ok(())
    });
}

/// Smallest and largest column of each row of `b`, `None` for empty rows.
pub(crate) fn row_bounds<I: ColIndex>(b: &CsrMatrix<I>, parallel: bool) -> Vec<Option<(usize, usize)>> {
    map_range(b.n_rows(), parallel, |j| {
        let cols = b.row_cols(j);
        if cols.is_empty() {
            None
        } else if b.is_canonical() {
            Some((cols[0].to_usize(), cols[cols.len() - 1].to_usize()))
        } else {
            let lo = cols.iter().min().unwrap().to_usize();
            let hi = cols.iter().max().unwrap().to_usize();
            Some((lo, hi))
        }
    })
}

pub(crate) fn finish_timings(timings: &mut BTreeMap<&'static str, f64>) {
    let total = [phase::SETUP, phase::SYMBOLIC, phase::NUMERIC]
        .iter()
        .filter_map(|p| timings.get(p))
        .sum();
    timings.insert(phase::TOTAL, total);
}
