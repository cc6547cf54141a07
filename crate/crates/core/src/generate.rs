//! Deterministic synthetic matrix generators.
//!
//! All generators return canonical matrices. With [`ValueMode::Ones`] every
//! stored value is `1.0`, so products hold small integers and different
//! SpGEMM algorithms can be compared for exact equality.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::csr::{check_width, CsrMatrix};
use crate::error::{Error, Result};
use crate::exec::map_range;
use crate::index::ColIndex;
use crate::rng::{self, Stream};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ValueMode {
    #[default]
    Ones,
    /// Uniform in (0, 1].
    Uniform,
}

#[inline]
fn draw_value(mode: ValueMode, rng: &mut Stream) -> f64 {
    match mode {
        ValueMode::Ones => 1.0,
        ValueMode::Uniform => 1.0 - rng.random::<f64>(),
    }
}

/// Recursive-matrix (R-mat) parameters. The fourth quadrant probability is
/// `1 - a - b - c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmatParams {
    pub scale: u32,
    pub edge_factor: u64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub seed: u64,
    pub values: ValueMode,
}

impl RmatParams {
    /// Graph500 quadrant probabilities: a = 0.57, b = c = 0.19.
    pub fn graph500(scale: u32, edge_factor: u64, seed: u64) -> Self {
        Self {
            scale,
            edge_factor,
            a: 0.57,
            b: 0.19,
            c: 0.19,
            seed,
            values: ValueMode::Ones,
        }
    }

    pub fn n(&self) -> usize {
        1usize << self.scale
    }

    fn validate(&self) -> Result<()> {
        if self.scale == 0 || self.scale > 31 {
            return Err(Error::InvalidParams(format!(
                "R-mat scale must be in 1..=31, got {}",
                self.scale
            )));
        }
        let probs = [self.a, self.b, self.c];
        if probs.iter().any(|p| p.is_nan() || *p < 0.0) || self.a + self.b + self.c > 1.0 + 1e-12 {
            return Err(Error::InvalidParams(format!(
                "R-mat probabilities must be non-negative with a + b + c <= 1, got a={}, b={}, c={}",
                self.a, self.b, self.c
            )));
        }
        let n = self.n() as u128;
        if (self.edge_factor as u128) * n > n * n {
            return Err(Error::InvalidParams(format!(
                "{} nonzeros requested but a {}x{} matrix holds at most {}",
                self.edge_factor as u128 * n,
                n,
                n,
                n * n
            )));
        }
        Ok(())
    }
}

/// Generates a square R-mat with exactly `edge_factor * 2^scale` distinct
/// nonzeros. Repeated coordinates are discarded and redrawn.
pub fn gen_rmat<I: ColIndex>(params: &RmatParams) -> Result<CsrMatrix<I>> {
    params.validate()?;
    let n = params.n();
    check_width::<I>(n)?;
    let scale = params.scale;
    let target = params.edge_factor as usize * n;
    let (ab, abc) = (params.a + params.b, params.a + params.b + params.c);

    let mut rng = rng::stream(params.seed);
    let sample = |rng: &mut Stream| -> u64 {
        let (mut row, mut col) = (0u64, 0u64);
        for _ in 0..scale {
            let r: f64 = rng.random();
            let (dr, dc) = if r < params.a {
                (0, 0)
            } else if r < ab {
                (0, 1)
            } else if r < abc {
                (1, 0)
            } else {
                (1, 1)
            };
            row = (row << 1) | dr;
            col = (col << 1) | dc;
        }
        (row << scale) | col
    };

    let mut keys: Vec<u64> = Vec::with_capacity(target);
    let mut fresh: Vec<u64> = Vec::new();
    let mut merged: Vec<u64> = Vec::new();
    let mut stalled = 0u32;
    while keys.len() < target {
        let need = target - keys.len();
        fresh.clear();
        fresh.extend((0..need).map(|_| sample(&mut rng)));
        fresh.sort_unstable();
        fresh.dedup();
        let before = keys.len();
        merge_unique(&keys, &fresh, &mut merged);
        core::mem::swap(&mut keys, &mut merged);
        if keys.len() == before {
            stalled += 1;
            if stalled > 100_000 {
                return Err(Error::InvalidParams(format!(
                    "R-mat stalled at {} of {} nonzeros; the quadrant probabilities cannot reach the target",
                    keys.len(),
                    target
                )));
            }
        } else {
            stalled = 0;
        }
    }

    let mask = (1u64 << scale) - 1;
    let mut row_ptr = alloc::vec![0usize; n + 1];
    for &k in &keys {
        row_ptr[(k >> scale) as usize + 1] += 1;
    }
    for i in 0..n {
        row_ptr[i + 1] += row_ptr[i];
    }
    let col: Vec<I> = keys.iter().map(|&k| I::from_usize((k & mask) as usize)).collect();
    let mut value_rng = rng::substream(params.seed, u64::MAX);
    let val: Vec<f64> = (0..keys.len())
        .map(|_| draw_value(params.values, &mut value_rng))
        .collect();
    Ok(CsrMatrix::from_parts_unchecked(n, n, row_ptr, col, val, true))
}

/// Merges two sorted, duplicate-free lists into `out`, keeping one copy of shared keys.
fn merge_unique(a: &[u64], b: &[u64], out: &mut Vec<u64>) {
    out.clear();
    out.reserve(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            core::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            core::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Draws `k` distinct values from `[0, n)`, returned sorted.
pub fn sample_distinct(rng: &mut Stream, n: u64, k: u64) -> Vec<u64> {
    assert!(k <= n, "cannot draw {k} distinct values from {n}");
    if 2 * k > n {
        let skip = sample_distinct(rng, n, n - k);
        let mut out = Vec::with_capacity(k as usize);
        let mut s = skip.iter().peekable();
        for v in 0..n {
            if s.peek() == Some(&&v) {
                s.next();
            } else {
                out.push(v);
            }
        }
        return out;
    }
    let mut keys: Vec<u64> = Vec::with_capacity(k as usize);
    let mut fresh = Vec::new();
    let mut merged = Vec::new();
    while (keys.len() as u64) < k {
        let need = k as usize - keys.len();
        fresh.clear();
        fresh.extend((0..need).map(|_| rng.random_range(0..n)));
        fresh.sort_unstable();
        fresh.dedup();
        merge_unique(&keys, &fresh, &mut merged);
        core::mem::swap(&mut keys, &mut merged);
    }
    keys
}

/// Uniform random (Erdős–Rényi style) matrix with a fixed count per row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErParams {
    pub n_rows: usize,
    pub n_cols: usize,
    pub nnz_per_row: usize,
    pub seed: u64,
    pub values: ValueMode,
}

impl ErParams {
    pub fn new(n_rows: usize, n_cols: usize, nnz_per_row: usize, seed: u64) -> Self {
        Self {
            n_rows,
            n_cols,
            nnz_per_row,
            seed,
            values: ValueMode::Ones,
        }
    }

    pub fn values(self, values: ValueMode) -> Self {
        Self { values, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.nnz_per_row > self.n_cols {
            return Err(Error::InvalidParams(format!(
                "{} nonzeros per row requested but there are only {} columns",
                self.nnz_per_row, self.n_cols
            )));
        }
        Ok(())
    }
}

/// Generates one row of a uniform random matrix from its own substream.
/// Columns come back sorted.
pub fn er_row(params: &ErParams, row: usize) -> (Vec<u64>, Vec<f64>) {
    let mut rng = rng::substream(params.seed, row as u64);
    let cols = sample_distinct(&mut rng, params.n_cols as u64, params.nnz_per_row as u64);
    let vals = cols.iter().map(|_| draw_value(params.values, &mut rng)).collect();
    (cols, vals)
}

pub fn gen_uniform_random<I: ColIndex>(params: &ErParams) -> Result<CsrMatrix<I>> {
    gen_uniform_random_masked(params, |_| true)
}

/// Like [`gen_uniform_random`] but only rows for which `keep` holds are
/// materialized; the others are left empty. Kept rows are identical to the
/// corresponding rows of the full matrix.
pub fn gen_uniform_random_masked<I, F>(params: &ErParams, keep: F) -> Result<CsrMatrix<I>>
where
    I: ColIndex,
    F: Fn(usize) -> bool + Sync + Send,
{
    params.validate()?;
    check_width::<I>(params.n_cols)?;
    let rows = map_range(params.n_rows, true, |i| keep(i).then(|| er_row(params, i)));
    Ok(assemble(params.n_rows, params.n_cols, rows))
}

fn assemble<I: ColIndex>(n_rows: usize, n_cols: usize, rows: Vec<Option<(Vec<u64>, Vec<f64>)>>) -> CsrMatrix<I> {
    let nnz: usize = rows.iter().flatten().map(|r| r.0.len()).sum();
    let mut row_ptr = Vec::with_capacity(n_rows + 1);
    row_ptr.push(0);
    let mut col = Vec::with_capacity(nnz);
    let mut val = Vec::with_capacity(nnz);
    for r in rows {
        if let Some((c, v)) = r {
            col.extend(c.into_iter().map(|x| I::from_usize(x as usize)));
            val.extend(v);
        }
        row_ptr.push(col.len());
    }
    CsrMatrix::from_parts_unchecked(n_rows, n_cols, row_ptr, col, val, true)
}

/// Square banded matrix: row `i` holds columns `i - half_width ..= i + half_width`
/// clipped to the matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandedParams {
    pub n: usize,
    pub half_width: usize,
    pub seed: u64,
    pub values: ValueMode,
}

pub fn gen_banded<I: ColIndex>(params: &BandedParams) -> Result<CsrMatrix<I>> {
    check_width::<I>(params.n)?;
    let n = params.n;
    let w = params.half_width;
    let rows = map_range(n, true, |i| {
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(n.saturating_sub(1));
        let mut rng = rng::substream(params.seed, i as u64);
        let cols: Vec<u64> = (lo as u64..=hi as u64).collect();
        let vals = cols.iter().map(|_| draw_value(params.values, &mut rng)).collect();
        Some((cols, vals))
    });
    Ok(assemble(n, n, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmat_saturates_tiny_matrix() {
        let m: CsrMatrix = gen_rmat(&RmatParams::graph500(1, 2, 3)).unwrap();
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.col(), &[0, 1, 0, 1]);
    }

    #[test]
    fn rmat_rejects_oversubscription() {
        let err = gen_rmat::<u32>(&RmatParams::graph500(1, 3, 0)).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(_)));
    }

    #[test]
    fn rmat_rejects_bad_probabilities() {
        let mut p = RmatParams::graph500(4, 2, 0);
        p.a = 0.9;
        assert!(gen_rmat::<u32>(&p).is_err());
        p.a = -0.1;
        assert!(gen_rmat::<u32>(&p).is_err());
    }

    #[test]
    fn rmat_is_seed_deterministic() {
        let p = RmatParams::graph500(10, 16, 7);
        let a: CsrMatrix = gen_rmat(&p).unwrap();
        let b: CsrMatrix = gen_rmat(&p).unwrap();
        assert_eq!(a.nnz(), 16 * 1024);
        assert!(a.bit_identical(&b));
        let c: CsrMatrix = gen_rmat(&RmatParams::graph500(10, 16, 8)).unwrap();
        assert_ne!(a.col(), c.col());
    }

    #[test]
    fn er_saturated_row() {
        let m: CsrMatrix = gen_uniform_random(&ErParams::new(1, 4, 4, 9)).unwrap();
        assert_eq!(m.col(), &[0, 1, 2, 3]);
    }

    #[test]
    fn er_rejects_too_many_per_row() {
        assert!(gen_uniform_random::<u32>(&ErParams::new(1, 4, 5, 9)).is_err());
    }

    #[test]
    fn er_masked_rows_match_full_matrix() {
        let p = ErParams::new(64, 1000, 20, 5);
        let full: CsrMatrix = gen_uniform_random(&p).unwrap();
        let half: CsrMatrix = gen_uniform_random_masked(&p, |i| i % 2 == 0).unwrap();
        for i in 0..64 {
            if i % 2 == 0 {
                assert_eq!(full.row_cols(i), half.row_cols(i));
            } else {
                assert_eq!(half.row_nnz(i), 0);
            }
        }
    }

    #[test]
    fn uniform_values_lie_in_half_open_unit_interval() {
        let mut p = ErParams::new(16, 50, 10, 1);
        p.values = ValueMode::Uniform;
        let m: CsrMatrix = gen_uniform_random(&p).unwrap();
        assert!(m.val().iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn banded_structure() {
        let p = BandedParams {
            n: 5,
            half_width: 1,
            seed: 0,
            values: ValueMode::Ones,
        };
        let m: CsrMatrix = gen_banded(&p).unwrap();
        assert_eq!(m.row_ptr(), &[0, 2, 5, 8, 11, 13]);
        assert_eq!(m.row_cols(0), &[0, 1]);
        assert_eq!(m.row_cols(4), &[3, 4]);
    }

    #[test]
    fn sample_distinct_complement_path() {
        let mut rng = rng::stream(1);
        let s = sample_distinct(&mut rng, 10, 9);
        assert_eq!(s.len(), 9);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
