use alloc::string::String;

/// First structural defect found by [`crate::csr::validate_csr`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CsrViolation {
    #[error("row_ptr has length {found}, expected {expected}")]
    RowPtrLength { expected: usize, found: usize },
    #[error("row_ptr[0] is {0}, expected 0")]
    RowPtrStart(usize),
    #[error("row_ptr decreases at index {index}")]
    RowPtrDecreasing { index: usize },
    #[error("row_ptr ends at {row_ptr_end} but there are {cols} column indices and {vals} values")]
    NnzMismatch {
        row_ptr_end: usize,
        cols: usize,
        vals: usize,
    },
    #[error("column index {col} at position {pos} is outside [0, {n_cols})")]
    ColumnOutOfRange { pos: usize, col: usize, n_cols: usize },
    #[error("row {row} is not strictly increasing in column index")]
    UnsortedRow { row: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("entry ({row}, {col}) is outside a {n_rows}x{n_cols} matrix")]
    EntryOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("invalid CSR matrix: {0}")]
    InvalidCsr(#[from] CsrViolation),
    #[error("dimension mismatch: A is {a_rows}x{a_cols} but B is {b_rows}x{b_cols}")]
    DimensionMismatch {
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },
    #[error("{n_cols} columns cannot be addressed with {index_bytes}-byte indices")]
    IndexWidth { n_cols: u64, index_bytes: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("row pointer is inconsistent with the product structure at row {row}")]
    RowPtrMismatch { row: usize },
    #[error("plan was computed for {planned} columns but B has {actual}")]
    PlanMismatch { planned: usize, actual: usize },
    #[error(
        "coarse-level row {row} needs {bytes} bytes of intermediate storage, over the budget of {budget} bytes"
    )]
    OverBudget { row: usize, bytes: u64, budget: u64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
