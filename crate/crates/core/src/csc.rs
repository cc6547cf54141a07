//! Column-major view of a row subset, as needed by the outer-product pass.

use alloc::vec;
use alloc::vec::Vec;

use crate::csr::CsrMatrix;
use crate::index::ColIndex;

/// The selected rows of a CSR matrix stored by column.
///
/// `row[k]` is a local id into `source_rows`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CscSubMatrix {
    pub source_rows: Vec<usize>,
    pub col_ptr: Vec<usize>,
    pub row: Vec<u32>,
    pub val: Vec<f64>,
}

impl CscSubMatrix {
    pub fn n_cols(&self) -> usize {
        self.col_ptr.len().saturating_sub(1)
    }

    pub fn nnz(&self) -> usize {
        self.row.len()
    }

    #[inline]
    pub fn col_range(&self, j: usize) -> core::ops::Range<usize> {
        self.col_ptr[j]..self.col_ptr[j + 1]
    }

    /// `(source row, column, value)` for every stored entry, column-major.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_cols()).flat_map(move |j| {
            self.col_range(j)
                .map(move |k| (self.source_rows[self.row[k] as usize], j, self.val[k]))
        })
    }
}

/// Converts `rows` of `source` into column-major form by histogram, prefix
/// sum and scatter.
///
/// `rows` must be sorted, unique and in range; entries of each column come
/// out in ascending local row order.
pub fn csr_rows_to_csc<I: ColIndex>(source: &CsrMatrix<I>, rows: &[usize]) -> CscSubMatrix {
    let mut out = CscSubMatrix::default();
    csr_rows_to_csc_into(source, rows, &mut out);
    out
}

/// As [`csr_rows_to_csc`], reusing the buffers of `out`.
pub fn csr_rows_to_csc_into<I: ColIndex>(source: &CsrMatrix<I>, rows: &[usize], out: &mut CscSubMatrix) {
    assert!(
        rows.windows(2).all(|w| w[0] < w[1]),
        "row selection must be sorted and unique"
    );
    assert!(rows.last().is_none_or(|&r| r < source.n_rows()), "row selection out of range");
    assert!(rows.len() <= u32::MAX as usize);

    let n_cols = source.n_cols();
    out.source_rows.clear();
    out.source_rows.extend_from_slice(rows);
    out.col_ptr.clear();
    out.col_ptr.resize(n_cols + 1, 0);

    let mut nnz = 0;
    for &r in rows {
        for c in source.row_cols(r) {
            out.col_ptr[c.to_usize() + 1] += 1;
        }
        nnz += source.row_nnz(r);
    }
    for j in 0..n_cols {
        out.col_ptr[j + 1] += out.col_ptr[j];
    }

    out.row.clear();
    out.row.resize(nnz, 0);
    out.val.clear();
    out.val.resize(nnz, 0.0);
    let mut fill = vec![0usize; n_cols];
    fill.copy_from_slice(&out.col_ptr[..n_cols]);
    for (local, &r) in rows.iter().enumerate() {
        for (c, &v) in source.row_cols(r).iter().zip(source.row_vals(r)) {
            let slot = &mut fill[c.to_usize()];
            out.row[*slot] = local as u32;
            out.val[*slot] = v;
            *slot += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_selection() {
        let a = CsrMatrix::<u32>::identity(4);
        let csc = csr_rows_to_csc(&a, &[]);
        assert_eq!(csc.nnz(), 0);
        assert!(csc.source_rows.is_empty());
        assert_eq!(csc.col_ptr, vec![0; 5]);
    }

    #[test]
    fn identity_two_rows() {
        let a = CsrMatrix::<u32>::identity(4);
        let csc = csr_rows_to_csc(&a, &[1, 3]);
        assert_eq!(csc.col_ptr, vec![0, 0, 1, 1, 2]);
        assert_eq!(csc.row, vec![0, 1]);
        assert_eq!(csc.source_rows, vec![1, 3]);
    }

    #[test]
    #[should_panic]
    fn unsorted_selection_panics() {
        let a = CsrMatrix::<u32>::identity(4);
        csr_rows_to_csc(&a, &[3, 1]);
    }
}
