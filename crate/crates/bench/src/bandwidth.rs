//! Streaming copy of an index/value array pair, used both as the bandwidth
//! estimate for the ideal bound and as the streaming baseline of the
//! microbenchmarks.

use std::hint::black_box;
use std::time::Instant;

use serde::Serialize;

use crate::error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandwidthMeasurement {
    /// Best rate over all repetitions.
    pub bytes_per_sec: f64,
    /// Bytes read plus bytes written by one repetition.
    pub bytes_moved: u64,
    pub best_seconds: f64,
    pub reps: usize,
}

/// Bytes of one index/value pair.
pub const PAIR_BYTES: usize = 4 + 8;

fn alloc<T: Clone>(n: usize, fill: T) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(n)
        .map_err(|e| BenchError::config(format!("cannot allocate {n} elements: {e}")))?;
    v.resize(n, fill);
    Ok(v)
}

/// Copies `cols`/`vals` into `out_cols`/`out_vals`.
#[inline(never)]
pub fn stream_copy(cols: &[u32], vals: &[f64], out_cols: &mut [u32], out_vals: &mut [f64]) {
    out_cols.copy_from_slice(cols);
    out_vals.copy_from_slice(vals);
}

/// Best-of-`reps` copy rate over an input pair of about `bytes` bytes.
pub fn measure_bandwidth(bytes: usize, reps: usize) -> Result<BandwidthMeasurement> {
    if reps == 0 {
        return Err(BenchError::config("bandwidth needs at least one repetition"));
    }
    let n = (bytes / PAIR_BYTES).max(1);
    let cols: Vec<u32> = (0..n as u32).collect();
    let vals: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let mut out_cols = alloc(n, 0u32)?;
    let mut out_vals = alloc(n, 0f64)?;
    let mut best = f64::INFINITY;
    for _ in 0..reps {
        let t = Instant::now();
        stream_copy(black_box(&cols), black_box(&vals), &mut out_cols, &mut out_vals);
        black_box((&out_cols, &out_vals));
        best = best.min(t.elapsed().as_secs_f64());
    }
    if out_cols[n - 1] != cols[n - 1] || out_vals[n - 1] != vals[n - 1] {
        return Err(BenchError::config("stream copy produced wrong data"));
    }
    let best = best.max(1e-9);
    let moved = 2 * (n * PAIR_BYTES) as u64;
    Ok(BandwidthMeasurement {
        bytes_per_sec: moved as f64 / best,
        bytes_moved: moved,
        best_seconds: best,
        reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accounting_and_positive_rate() {
        let m = measure_bandwidth(1 << 20, 3).unwrap();
        let n = (1 << 20) / PAIR_BYTES;
        assert_eq!(m.bytes_moved, 2 * (n * PAIR_BYTES) as u64);
        assert!(m.bytes_per_sec > 0.0);
        assert!(measure_bandwidth(1024, 0).is_err());
    }
}
