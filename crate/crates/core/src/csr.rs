//! Compressed sparse row storage.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CsrViolation, Error, Result};
use crate::index::ColIndex;

/// A sparse matrix in compressed sparse row format.
///
/// `row_ptr` always has `n_rows + 1` entries with `row_ptr[n_rows] == nnz`.
/// When `canonical` is set every row is strictly increasing in column index.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<I = u32> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col: Vec<I>,
    val: Vec<f64>,
    canonical: bool,
}

impl<I: ColIndex> CsrMatrix<I> {
    /// Builds a matrix from raw arrays, checking every structural invariant.
    ///
    /// Canonical form is detected, not assumed.
    pub fn from_raw_parts(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col: Vec<I>,
        val: Vec<f64>,
    ) -> Result<Self> {
        check_width::<I>(n_cols)?;
        validate_csr(n_rows, n_cols, &row_ptr, &col, val.len(), false)?;
        let canonical = rows_strictly_sorted(&row_ptr, &col);
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col,
            val,
            canonical,
        })
    }

    /// Skips validation. Used by kernels whose output is correct by construction.
    pub(crate) fn from_parts_unchecked(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col: Vec<I>,
        val: Vec<f64>,
        canonical: bool,
    ) -> Self {
        debug_assert_eq!(
            validate_csr(n_rows, n_cols, &row_ptr, &col, val.len(), canonical),
            Ok(())
        );
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col,
            val,
            canonical,
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_parts_unchecked(n_rows, n_cols, vec![0; n_rows + 1], Vec::new(), Vec::new(), true)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_parts_unchecked(
            n,
            n,
            (0..=n).collect(),
            (0..n).map(I::from_usize).collect(),
            vec![1.0; n],
            true,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col(&self) -> &[I] {
        &self.col
    }

    pub fn val(&self) -> &[f64] {
        &self.val
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    #[inline]
    pub fn row_range(&self, i: usize) -> core::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    #[inline]
    pub fn row_cols(&self, i: usize) -> &[I] {
        &self.col[self.row_range(i)]
    }

    #[inline]
    pub fn row_vals(&self, i: usize) -> &[f64] {
        &self.val[self.row_range(i)]
    }

    #[inline]
    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Bytes per stored column index.
    pub fn col_index_bytes(&self) -> usize {
        I::BYTES
    }

    pub fn into_raw_parts(self) -> (usize, usize, Vec<usize>, Vec<I>, Vec<f64>) {
        (self.n_rows, self.n_cols, self.row_ptr, self.col, self.val)
    }

    pub fn validate(&self) -> core::result::Result<(), CsrViolation> {
        validate_csr(
            self.n_rows,
            self.n_cols,
            &self.row_ptr,
            &self.col,
            self.val.len(),
            self.canonical,
        )
    }

    /// Replaces every value with `f`, keeping the structure.
    pub fn map_values(mut self, mut f: impl FnMut(f64) -> f64) -> Self {
        self.val.iter_mut().for_each(|v| *v = f(*v));
        self
    }

    /// Iterates `(row, col, val)` in storage order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            self.row_range(i)
                .map(move |k| (i, self.col[k].to_usize(), self.val[k]))
        })
    }

    /// Sorts every row by column index. Rows are not merged, so the result
    /// is canonical only if no row holds a repeated column.
    pub fn sort_rows(&mut self) {
        if self.canonical {
            return;
        }
        let mut scratch: Vec<(I, f64)> = Vec::new();
        for i in 0..self.n_rows {
            let range = self.row_range(i);
            sort_row_pairs(&mut self.col[range.clone()], &mut self.val[range], &mut scratch);
        }
        self.canonical = rows_strictly_sorted(&self.row_ptr, &self.col);
    }

    /// Structural equality plus bitwise value equality.
    pub fn bit_identical(&self, other: &Self) -> bool {
        self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
            && self.row_ptr == other.row_ptr
            && self.col == other.col
            && self
                .val
                .iter()
                .zip(&other.val)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

pub(crate) fn check_width<I: ColIndex>(n_cols: usize) -> Result<()> {
    if n_cols as u64 > I::column_capacity() {
        return Err(Error::IndexWidth {
            n_cols: n_cols as u64,
            index_bytes: I::BYTES,
        });
    }
    Ok(())
}

/// Sorts one row's `(col, val)` pairs by column, keeping the relative order of
/// equal columns.
pub(crate) fn sort_row_pairs<I: ColIndex>(cols: &mut [I], vals: &mut [f64], scratch: &mut Vec<(I, f64)>) {
    if cols.windows(2).all(|w| w[0] <= w[1]) {
        return;
    }
    scratch.clear();
    scratch.extend(cols.iter().copied().zip(vals.iter().copied()));
    scratch.sort_by_key(|p| p.0);
    for (k, (c, v)) in scratch.drain(..).enumerate() {
        cols[k] = c;
        vals[k] = v;
    }
}

pub(crate) fn rows_strictly_sorted<I: ColIndex>(row_ptr: &[usize], col: &[I]) -> bool {
    row_ptr
        .windows(2)
        .all(|w| col[w[0]..w[1]].windows(2).all(|p| p[0] < p[1]))
}

/// Checks every CSR invariant on raw arrays and reports the first violation.
///
/// Row sortedness is checked only when `canonical` is set.
pub fn validate_csr<I: ColIndex>(
    n_rows: usize,
    n_cols: usize,
    row_ptr: &[usize],
    col: &[I],
    n_vals: usize,
    canonical: bool,
) -> core::result::Result<(), CsrViolation> {
    if row_ptr.len() != n_rows + 1 {
        return Err(CsrViolation::RowPtrLength {
            expected: n_rows + 1,
            found: row_ptr.len(),
        });
    }
    if row_ptr[0] != 0 {
        return Err(CsrViolation::RowPtrStart(row_ptr[0]));
    }
    if let Some(index) = row_ptr.windows(2).position(|w| w[1] < w[0]) {
        return Err(CsrViolation::RowPtrDecreasing { index: index + 1 });
    }
    let end = row_ptr[n_rows];
    if end != col.len() || end != n_vals {
        return Err(CsrViolation::NnzMismatch {
            row_ptr_end: end,
            cols: col.len(),
            vals: n_vals,
        });
    }
    if let Some(pos) = col.iter().position(|c| c.to_usize() >= n_cols) {
        return Err(CsrViolation::ColumnOutOfRange {
            pos,
            col: col[pos].to_usize(),
            n_cols,
        });
    }
    if canonical {
        for row in 0..n_rows {
            if col[row_ptr[row]..row_ptr[row + 1]].windows(2).any(|p| p[0] >= p[1]) {
                return Err(CsrViolation::UnsortedRow { row });
            }
        }
    }
    Ok(())
}

/// Builds a canonical matrix from coordinate entries.
///
/// Duplicate coordinates are summed in input order.
pub fn csr_from_triplets<I: ColIndex>(
    triplets: &[(usize, usize, f64)],
    n_rows: usize,
    n_cols: usize,
) -> Result<CsrMatrix<I>> {
    check_width::<I>(n_cols)?;
    let mut counts = vec![0usize; n_rows + 1];
    for &(r, c, _) in triplets {
        if r >= n_rows || c >= n_cols {
            return Err(Error::EntryOutOfRange {
                row: r,
                col: c,
                n_rows,
                n_cols,
            });
        }
        counts[r + 1] += 1;
    }
    for i in 0..n_rows {
        counts[i + 1] += counts[i];
    }
    // stable counting sort by row
    let mut next = counts.clone();
    let mut bucketed: Vec<(usize, f64)> = vec![(0, 0.0); triplets.len()];
    for &(r, c, v) in triplets {
        bucketed[next[r]] = (c, v);
        next[r] += 1;
    }

    let mut row_ptr = Vec::with_capacity(n_rows + 1);
    row_ptr.push(0);
    let mut col = Vec::with_capacity(triplets.len());
    let mut val = Vec::with_capacity(triplets.len());
    for i in 0..n_rows {
        let row = &mut bucketed[counts[i]..counts[i + 1]];
        row.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < row.len() {
            let c = row[k].0;
            let mut sum = row[k].1;
            k += 1;
            while k < row.len() && row[k].0 == c {
                sum += row[k].1;
                k += 1;
            }
            col.push(I::from_usize(c));
            val.push(sum);
        }
        row_ptr.push(col.len());
    }
    Ok(CsrMatrix::from_parts_unchecked(n_rows, n_cols, row_ptr, col, val, true))
}
