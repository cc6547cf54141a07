//! System-aware choice of fine- and coarse-level chunk counts.
//!
//! The fine level keeps a dense accumulator of `m / n` slots plus, per chunk,
//! a histogram counter, a prefix-sum entry and two active cache lines in L2.
//! Its storage `m·s_acc/n + n·s_chunk` is minimized at `n = sqrt(m·s_acc/s_chunk)`
//! with optimum `2·sqrt(m·s_acc·s_chunk)`. When that optimum exceeds L2 the
//! column range is first split into coarse chunks of
//! `floor_pow2(l2² / (4·s_acc·s_chunk))` columns.

use alloc::format;

use crate::error::{Error, Result};
use crate::index::Phase;

/// Cache and type sizes that drive planning.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystemParams {
    pub cache_line_bytes: usize,
    /// Private L2 size per core.
    pub l2_bytes: usize,
    /// Cap on buffered intermediate product for one coarse-level batch.
    pub memory_budget_bytes: u64,
    pub histo_type_bytes: usize,
    pub prefix_sum_type_bytes: usize,
    pub val_bytes: usize,
}

impl Default for SystemParams {
    /// 64-byte lines, 1 MiB L2, 1 GiB coarse-level budget, 4-byte counters
    /// and 8-byte values.
    fn default() -> Self {
        Self {
            cache_line_bytes: 64,
            l2_bytes: 1 << 20,
            memory_budget_bytes: 1 << 30,
            histo_type_bytes: 4,
            prefix_sum_type_bytes: 4,
            val_bytes: core::mem::size_of::<f64>(),
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("cache_line_bytes", self.cache_line_bytes as u64),
            ("l2_bytes", self.l2_bytes as u64),
            ("memory_budget_bytes", self.memory_budget_bytes),
            ("histo_type_bytes", self.histo_type_bytes as u64),
            ("prefix_sum_type_bytes", self.prefix_sum_type_bytes as u64),
            ("val_bytes", self.val_bytes as u64),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidParams(format!("{name} must be positive")));
        }
        if !self.cache_line_bytes.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "cache line size {} is not a power of two",
                self.cache_line_bytes
            )));
        }
        Ok(())
    }

    /// Bytes per fine-level chunk: counter, offset and two active lines.
    pub fn s_chunk_fine(&self) -> usize {
        self.histo_type_bytes + self.prefix_sum_type_bytes + 2 * self.cache_line_bytes
    }

    /// Bytes per dense-accumulator slot: the value plus a one-byte flag for
    /// the numeric phase, only the flag for the symbolic phase.
    pub fn s_dense_accum(&self, phase: Phase) -> usize {
        match phase {
            Phase::Numeric => self.val_bytes + 1,
            Phase::Symbolic => 1,
        }
    }

    /// Shortest fine chunk: one cache line of 4-byte local indices.
    fn min_chunk_len(&self) -> usize {
        (self.cache_line_bytes / 4).max(1)
    }
}

/// Chunking of a column range: `n_chunks · chunk_len` columns, chunk of a
/// column is `col >> shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FineParams {
    pub n_chunks: usize,
    pub chunk_len: usize,
    pub shift: u32,
}

impl FineParams {
    /// Splits `range` (a power of two) into `n_chunks` (a power of two).
    pub fn new(range: usize, n_chunks: usize) -> Self {
        assert!(range.is_power_of_two() && n_chunks.is_power_of_two() && n_chunks <= range);
        let chunk_len = range / n_chunks;
        Self {
            n_chunks,
            chunk_len,
            shift: chunk_len.trailing_zeros(),
        }
    }

    pub fn range(&self) -> usize {
        self.n_chunks * self.chunk_len
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChunkPlan {
    pub phase: Phase,
    /// Column count of `C` rounded up to a power of two.
    pub m_c: usize,
    pub s_dense_accum: usize,
    pub s_chunk_fine: usize,
    pub n_chunks_fine: usize,
    pub chunk_len_fine: usize,
    pub shift_fine: u32,
    /// Largest column range whose fine-level working set fits in L2.
    pub m_c_max_l2: usize,
    pub n_chunks_coarse: usize,
    pub chunk_len_coarse: usize,
    pub shift_coarse: u32,
    pub use_coarse: bool,
    /// False when the coarse level is disabled by the caller.
    pub coarse_allowed: bool,
    /// Fine-level chunking over the whole `[0, m_c)` range, used for rows
    /// processed without a coarse level. Equal to the fine fields when
    /// `use_coarse` is false.
    pub fine_only: FineParams,
}

impl ChunkPlan {
    /// Hand-built plan over `m_c` columns (a power of two) with the given
    /// chunk counts, bypassing the cost model. A coarse count above one
    /// enables the coarse level.
    pub fn manual(phase: Phase, m_c: usize, n_chunks_coarse: usize, n_chunks_fine: usize) -> Self {
        let sys = SystemParams::default();
        let coarse = FineParams::new(m_c, n_chunks_coarse);
        let fine = FineParams::new(coarse.chunk_len, n_chunks_fine);
        let use_coarse = n_chunks_coarse > 1;
        Self {
            phase,
            m_c,
            s_dense_accum: sys.s_dense_accum(phase),
            s_chunk_fine: sys.s_chunk_fine(),
            n_chunks_fine: fine.n_chunks,
            chunk_len_fine: fine.chunk_len,
            shift_fine: fine.shift,
            m_c_max_l2: coarse.chunk_len,
            n_chunks_coarse: coarse.n_chunks,
            chunk_len_coarse: coarse.chunk_len,
            shift_coarse: coarse.shift,
            use_coarse,
            coarse_allowed: use_coarse,
            fine_only: if use_coarse { FineParams::new(m_c, n_chunks_fine.min(m_c)) } else { fine },
        }
    }

    /// Fine-level parameters inside one coarse chunk (or over the whole
    /// range without a coarse level).
    pub fn fine(&self) -> FineParams {
        FineParams {
            n_chunks: self.n_chunks_fine,
            chunk_len: self.chunk_len_fine,
            shift: self.shift_fine,
        }
    }

    pub fn coarse(&self) -> FineParams {
        FineParams {
            n_chunks: self.n_chunks_coarse,
            chunk_len: self.chunk_len_coarse,
            shift: self.shift_coarse,
        }
    }

    /// True when the coarse reorder itself needs more metadata than L2 holds,
    /// the point past which reordering stops streaming efficiently.
    pub fn coarse_exceeds_l2(&self, sys: &SystemParams) -> bool {
        self.use_coarse && self.n_chunks_coarse.saturating_mul(self.s_chunk_fine) > sys.l2_bytes
    }
}

pub fn ceil_pow2(x: usize) -> usize {
    x.max(1).next_power_of_two()
}

pub fn floor_pow2(x: u128) -> u128 {
    if x == 0 {
        0
    } else {
        1u128 << (127 - x.leading_zeros())
    }
}

/// Fine-level storage in bytes for `n_chunks` chunks over `m` columns.
pub fn fine_level_storage(m: usize, s_dense_accum: usize, s_chunk_fine: usize, n_chunks: usize) -> f64 {
    (m as f64) * (s_dense_accum as f64) / (n_chunks as f64) + (n_chunks as f64) * (s_chunk_fine as f64)
}

/// Unrounded storage-minimizing chunk count.
pub fn optimal_chunks_raw(m: usize, s_dense_accum: usize, s_chunk_fine: usize) -> f64 {
    libm::sqrt((m as f64) * (s_dense_accum as f64) / (s_chunk_fine as f64))
}

/// Whether the fine level alone, at its optimal chunk count, fits in L2:
/// `2·sqrt(m·s_acc·s_chunk) <= l2`, evaluated exactly in integers.
pub fn fine_level_fits(m: usize, s_dense_accum: usize, s_chunk_fine: usize, l2_bytes: usize) -> bool {
    4 * (m as u128) * (s_dense_accum as u128) * (s_chunk_fine as u128) <= (l2_bytes as u128) * (l2_bytes as u128)
}

/// `floor_pow2(l2² / (4·s_acc·s_chunk))`, at least 1.
pub fn m_c_max_l2(l2_bytes: usize, s_dense_accum: usize, s_chunk_fine: usize) -> usize {
    let raw = (l2_bytes as u128) * (l2_bytes as u128) / (4 * s_dense_accum as u128 * s_chunk_fine as u128);
    floor_pow2(raw).clamp(1, 1u128 << 62) as usize
}

/// Power-of-two chunk count nearest the optimum on the log2 scale, ties up.
///
/// The choice is made by comparing storage at the two powers of two that
/// bracket the optimum, which is the same rule evaluated without rounding
/// error at the boundary. The result is then clamped so chunks hold at
/// least `min_len` columns.
fn fine_params(range: usize, s_dense_accum: usize, s_chunk_fine: usize, min_len: usize) -> FineParams {
    let x = optimal_chunks_raw(range, s_dense_accum, s_chunk_fine);
    let mut lo = if x < 1.0 { 1usize } else { 1usize << (libm::floor(libm::log2(x)) as u32).min(62) };
    while (lo as f64) > x && lo > 1 {
        lo /= 2;
    }
    while ((lo * 2) as f64) <= x {
        lo *= 2;
    }
    let hi = lo * 2;
    let f = |n: usize| fine_level_storage(range, s_dense_accum, s_chunk_fine, n);
    let mut n = if x < 1.0 || f(lo) < f(hi) { lo } else { hi };
    n = n.min(range);
    let min_len = min_len.min(range);
    if range / n < min_len {
        n = range / min_len.next_power_of_two().min(range);
    }
    FineParams::new(range, n.max(1))
}

/// Plans chunking for a product with `m_c` columns.
pub fn compute_chunk_plan(sys: &SystemParams, m_c: usize, phase: Phase) -> ChunkPlan {
    plan(sys, m_c, phase, true)
}

/// Plan with the coarse level disabled: every row uses the fine level over
/// the whole column range.
pub fn compute_chunk_plan_fine_only(sys: &SystemParams, m_c: usize, phase: Phase) -> ChunkPlan {
    plan(sys, m_c, phase, false)
}

fn plan(sys: &SystemParams, m_c: usize, phase: Phase, coarse_allowed: bool) -> ChunkPlan {
    let m = ceil_pow2(m_c);
    let s_acc = sys.s_dense_accum(phase);
    let s_chunk = sys.s_chunk_fine();
    let min_len = sys.min_chunk_len();
    let fine_only = fine_params(m, s_acc, s_chunk, min_len);
    let use_coarse = coarse_allowed && !fine_level_fits(m, s_acc, s_chunk, sys.l2_bytes);

    let (fine, m_max, coarse) = if use_coarse {
        let m_max = m_c_max_l2(sys.l2_bytes, s_acc, s_chunk);
        debug_assert!(m_max < m);
        let fine = fine_params(m_max, s_acc, s_chunk, min_len);
        (fine, m_max, FineParams::new(m, m / m_max))
    } else {
        (fine_only, m, FineParams::new(m, 1))
    };

    ChunkPlan {
        phase,
        m_c: m,
        s_dense_accum: s_acc,
        s_chunk_fine: s_chunk,
        n_chunks_fine: fine.n_chunks,
        chunk_len_fine: fine.chunk_len,
        shift_fine: fine.shift,
        m_c_max_l2: m_max,
        n_chunks_coarse: coarse.n_chunks,
        chunk_len_coarse: coarse.chunk_len,
        shift_coarse: coarse.shift,
        use_coarse,
        coarse_allowed,
        fine_only,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(l2: usize, val_bytes: usize) -> SystemParams {
        SystemParams {
            l2_bytes: l2,
            val_bytes,
            ..SystemParams::default()
        }
    }

    #[test]
    fn chunk_cost_constants() {
        let s = SystemParams::default();
        assert_eq!(s.s_chunk_fine(), 136);
        assert_eq!(s.s_dense_accum(Phase::Symbolic), 1);
        assert_eq!(sys(1 << 20, 4).s_dense_accum(Phase::Numeric), 5);
    }

    #[test]
    fn numeric_fine_only_example() {
        // sqrt(2^18 * 5 / 136) = 98.17, log2 = 6.62 -> 2^7
        let raw = optimal_chunks_raw(1 << 18, 5, 136);
        assert!((raw - 98.17).abs() < 0.01);
        let p = compute_chunk_plan(&sys(1 << 20, 4), 1 << 18, Phase::Numeric);
        assert!(!p.use_coarse);
        assert_eq!(p.n_chunks_fine, 128);
        assert_eq!(p.chunk_len_fine, 1 << 11);
        assert_eq!(p.shift_fine, 11);
        assert_eq!(p.fine_only, p.fine());
    }

    #[test]
    fn l2_crossovers() {
        assert_eq!(m_c_max_l2(1 << 21, 1, 136), 1 << 32);
        assert_eq!(m_c_max_l2(1 << 20, 1, 136), 1 << 30);
    }

    #[test]
    fn coarse_chunk_count() {
        let p = compute_chunk_plan(&sys(1 << 21, 8), 1 << 33, Phase::Symbolic);
        assert!(p.use_coarse);
        assert_eq!(p.m_c_max_l2, 1 << 32);
        assert_eq!(p.n_chunks_coarse, 2);
        assert_eq!(p.chunk_len_coarse, 1 << 32);
        assert_eq!(p.n_chunks_fine * p.chunk_len_fine, p.m_c_max_l2);
    }

    #[test]
    fn coarse_switch_at_power_of_two_boundary() {
        let s = sys(1 << 20, 8);
        assert!(!compute_chunk_plan(&s, 1 << 30, Phase::Symbolic).use_coarse);
        assert!(compute_chunk_plan(&s, (1 << 30) + 1, Phase::Symbolic).use_coarse);
        assert!(!compute_chunk_plan_fine_only(&s, 1 << 40, Phase::Symbolic).use_coarse);
    }

    #[test]
    fn tiny_ranges_stay_valid() {
        for m in [1usize, 2, 3, 7, 16, 100] {
            let p = compute_chunk_plan(&SystemParams::default(), m, Phase::Numeric);
            assert_eq!(p.n_chunks_fine * p.chunk_len_fine, p.m_c);
            assert!(p.n_chunks_fine >= 1);
        }
    }

    #[test]
    fn invalid_system_params() {
        let mut s = SystemParams {
            cache_line_bytes: 48,
            ..SystemParams::default()
        };
        assert!(s.validate().is_err());
        s.cache_line_bytes = 64;
        s.l2_bytes = 0;
        assert!(s.validate().is_err());
        assert!(SystemParams::default().validate().is_ok());
    }
}
