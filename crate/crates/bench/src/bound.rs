//! Minimum-data-volume time model for Gustavson-style SpGEMM.
//!
//! Reads: row pointers of `A` twice (symbolic and numeric), per nonzero of
//! `A` its entry twice plus both row pointers of the referenced `B` row
//! twice, and every intermediate product element's column twice and value
//! once. Writes: the row pointer and entries of `C` once.

use magnus_core::{ColIndex, CsrMatrix, SpgemmResult};
use serde::Serialize;

use crate::error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdealBoundInputs {
    pub n_a: u64,
    pub nnz_a: u64,
    pub n_inter_prod: u64,
    pub n_c: u64,
    pub nnz_c: u64,
    pub s_row_ptr: u64,
    pub s_col_idx: u64,
    pub s_val: u64,
    pub bandwidth_bytes_per_sec: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdealBound {
    pub read_bytes: u128,
    pub write_bytes: u128,
    pub seconds: f64,
}

impl IdealBoundInputs {
    /// Statistics of a computed product with 8-byte row pointers and
    /// values.
    pub fn from_product<I: ColIndex>(a: &CsrMatrix<I>, result: &SpgemmResult<I>, bandwidth: f64) -> Self {
        Self {
            n_a: a.n_rows() as u64,
            nnz_a: a.nnz() as u64,
            n_inter_prod: result.counter(magnus_core::product::counter::INTER_PROD_SIZE),
            n_c: result.c.n_rows() as u64,
            nnz_c: result.c.nnz() as u64,
            s_row_ptr: 8,
            s_col_idx: I::BYTES as u64,
            s_val: 8,
            bandwidth_bytes_per_sec: bandwidth,
        }
    }
}

pub fn read_volume(x: &IdealBoundInputs) -> u128 {
    let w = |v: u64| v as u128;
    2 * (w(x.n_a) + 1) * w(x.s_row_ptr)
        + w(x.nnz_a) * (4 * w(x.s_row_ptr) + 2 * w(x.s_col_idx) + w(x.s_val))
        + w(x.n_inter_prod) * (2 * w(x.s_col_idx) + w(x.s_val))
}

pub fn write_volume(x: &IdealBoundInputs) -> u128 {
    let w = |v: u64| v as u128;
    (w(x.n_c) + 1) * w(x.s_row_ptr) + w(x.nnz_c) * (w(x.s_col_idx) + w(x.s_val))
}

pub fn ideal_bound(inputs: &IdealBoundInputs) -> Result<IdealBound> {
    let bw = inputs.bandwidth_bytes_per_sec;
    if !(bw.is_finite() && bw > 0.0) {
        return Err(BenchError::config(format!("bandwidth must be positive, got {bw}")));
    }
    let read_bytes = read_volume(inputs);
    let write_bytes = write_volume(inputs);
    Ok(IdealBound {
        read_bytes,
        write_bytes,
        seconds: (read_bytes + write_bytes) as f64 / bw,
    })
}
