//! Column-index and payload abstractions shared by every kernel.

use core::fmt::Debug;
use core::hash::Hash;

/// Storage type for column indices.
///
/// Matrices with at most 2^32 columns use `u32`; wider matrices use `u64`.
pub trait ColIndex: Copy + Ord + Default + Send + Sync + Debug + Hash + 'static {
    /// Width of one index in bytes.
    const BYTES: usize;
    /// Largest representable index; also used as a sort sentinel.
    const MAX: Self;

    fn to_usize(self) -> usize;

    /// Narrowing conversion. The caller guarantees the value fits.
    fn from_usize(v: usize) -> Self;

    /// Number of distinct column positions this type can address.
    fn column_capacity() -> u64;
}

impl ColIndex for u32 {
    const BYTES: usize = 4;
    const MAX: Self = u32::MAX;

    #[inline(always)]
    fn to_usize(self) -> usize {
        self as usize
    }

    #[inline(always)]
    fn from_usize(v: usize) -> Self {
        debug_assert!(v <= u32::MAX as usize, "index {v} does not fit in u32");
        v as u32
    }

    fn column_capacity() -> u64 {
        1 << 32
    }
}

impl ColIndex for u64 {
    const BYTES: usize = 8;
    const MAX: Self = u64::MAX;

    #[inline(always)]
    fn to_usize(self) -> usize {
        self as usize
    }

    #[inline(always)]
    fn from_usize(v: usize) -> Self {
        v as u64
    }

    fn column_capacity() -> u64 {
        u64::MAX
    }
}

/// Index width (4 or 8 bytes) required to address `n_cols` columns.
pub fn col_index_width(n_cols: u64) -> usize {
    if n_cols <= <u32 as ColIndex>::column_capacity() {
        4
    } else {
        8
    }
}

/// What flows through the accumulators alongside the column indices.
///
/// The numeric phase carries `f64` products. The symbolic phase carries `()`,
/// so the same kernels run with zero-sized value buffers and only the
/// structural work (bitmap, counters, reordering of indices) remains.
pub trait Payload: Copy + Default + Send + Sync + PartialEq + Debug + 'static {
    const NUMERIC: bool;

    fn product(a: f64, b: f64) -> Self;

    fn accumulate(&mut self, rhs: Self);
}

impl Payload for f64 {
    const NUMERIC: bool = true;

    #[inline(always)]
    fn product(a: f64, b: f64) -> Self {
        a * b
    }

    #[inline(always)]
    fn accumulate(&mut self, rhs: Self) {
        *self += rhs;
    }
}

impl Payload for () {
    const NUMERIC: bool = false;

    #[inline(always)]
    fn product(_: f64, _: f64) -> Self {}

    #[inline(always)]
    fn accumulate(&mut self, _: Self) {}
}

/// Which of the two SpGEMM passes a plan or kernel is configured for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Symbolic,
    Numeric,
}
