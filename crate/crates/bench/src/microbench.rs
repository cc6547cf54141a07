//! Building-block microbenchmarks on a synthetic intermediate product:
//! histogram, prefix sum, reorder, dense and sort accumulation, and a
//! streaming copy of the same volume.
//!
//! Every stage records a checksum verdict alongside its time, so timing runs
//! are also correctness runs.

use std::time::Instant;

use magnus_core::accum::{select_accumulator, sort_accumulate_into, AccumKind, AccumThresholds, SortScratch};
use magnus_core::{rng, DenseAccumulator};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bandwidth::stream_copy;
use crate::error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StreamSpec {
    /// Number of elements.
    pub size: usize,
    /// Exclusive upper bound on index values.
    pub length: usize,
    pub seed: u64,
}

/// One timed stage. CSV column order follows field order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub benchmark: String,
    pub size: usize,
    pub length: usize,
    pub n_chunks: usize,
    pub workers: usize,
    pub rep: usize,
    pub seconds: f64,
    /// Stream elements per second.
    pub rate: f64,
    pub checksum_ok: bool,
}

pub const STAGES: [&str; 7] = [
    "histogram",
    "prefix_sum",
    "reorder",
    "dense_accumulate",
    "sort_accumulate",
    "stream",
    "total",
];

/// Order-independent hash of a multiset of indices.
fn multiset_hash(cols: impl Iterator<Item = u64>) -> u64 {
    cols.fold(0u64, |h, c| h.wrapping_add(rng::splitmix64(c)))
}

struct Worker {
    cols: Vec<u32>,
    vals: Vec<f64>,
    counts: Vec<u32>,
    offsets: Vec<u32>,
    out_cols: Vec<u32>,
    out_vals: Vec<f64>,
    dense: DenseAccumulator<u32, f64>,
    sort: SortScratch<u32>,
    dense_distinct: usize,
    dense_sum: f64,
    sort_distinct: usize,
    sort_sum: f64,
}

impl Worker {
    fn new(spec: &StreamSpec, part: usize, size: usize, n_chunks: usize) -> Self {
        let mut g = rng::substream(spec.seed, part as u64);
        let cols: Vec<u32> = (0..size).map(|_| g.random_range(0..spec.length as u64) as u32).collect();
        Self {
            vals: vec![1.0; size],
            counts: vec![0; n_chunks],
            offsets: vec![0; n_chunks + 1],
            out_cols: vec![0; size],
            out_vals: vec![0.0; size],
            dense: DenseAccumulator::new(spec.length / n_chunks),
            sort: SortScratch::new(),
            dense_distinct: 0,
            dense_sum: 0.0,
            sort_distinct: 0,
            sort_sum: 0.0,
            cols,
        }
    }

    fn histogram(&mut self, shift: u32) {
        self.counts.fill(0);
        for &c in &self.cols {
            self.counts[(c >> shift) as usize] += 1;
        }
    }

    fn prefix_sum(&mut self) {
        let mut acc = 0;
        self.offsets[0] = 0;
        for (k, &c) in self.counts.iter().enumerate() {
            acc += c;
            self.offsets[k + 1] = acc;
        }
    }

    fn reorder(&mut self, shift: u32, mask: u32) {
        self.counts.fill(0);
        for (&c, &v) in self.cols.iter().zip(&self.vals) {
            let chunk = (c >> shift) as usize;
            let slot = (self.offsets[chunk] + self.counts[chunk]) as usize;
            self.counts[chunk] += 1;
            self.out_cols[slot] = c & mask;
            self.out_vals[slot] = v;
        }
    }

    fn chunk(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k] as usize..self.offsets[k + 1] as usize
    }

    fn dense_accumulate(&mut self) {
        let (mut distinct, mut sum) = (0, 0.0);
        for k in 0..self.counts.len() {
            let r = self.chunk(k);
            self.dense.scatter(&self.out_cols[r.clone()], &self.out_vals[r]);
            distinct += self.dense.count();
            self.dense.drain(|_, v| sum += v);
        }
        self.dense_distinct = distinct;
        self.dense_sum = sum;
    }

    fn sort_accumulate(&mut self) {
        let (mut distinct, mut sum) = (0, 0.0);
        for k in 0..self.counts.len() {
            let r = self.chunk(k);
            distinct += sort_accumulate_into(&self.out_cols[r.clone()], &self.out_vals[r], &mut self.sort, |_, v| {
                sum += v
            });
        }
        self.sort_distinct = distinct;
        self.sort_sum = sum;
    }

    fn stream(&mut self) {
        stream_copy(&self.cols, &self.vals, &mut self.out_cols, &mut self.out_vals);
    }
}

fn timed(workers: &mut [Worker], parallel: bool, f: impl Fn(&mut Worker) + Sync + Send) -> f64 {
    let t = Instant::now();
    if parallel {
        workers.par_iter_mut().for_each(f);
    } else {
        workers.iter_mut().for_each(f);
    }
    t.elapsed().as_secs_f64().max(1e-9)
}

/// Times every stage once over a freshly generated stream split evenly
/// between `workers` (each worker owns its part; stages are separated by a
/// barrier). `total` sums histogram, prefix sum, reorder and the
/// accumulator that the default thresholds select for the average chunk
/// size.
pub fn microbench_building_blocks(
    spec: &StreamSpec,
    n_chunks: usize,
    workers: usize,
    rep: usize,
) -> Result<Vec<BenchRecord>> {
    if spec.length == 0 || spec.length > 1 << 32 {
        return Err(BenchError::config(format!("stream length {} outside [1, 2^32]", spec.length)));
    }
    if !n_chunks.is_power_of_two() || n_chunks > spec.length {
        return Err(BenchError::config(format!(
            "chunk count {n_chunks} must be a power of two no larger than the stream length {}",
            spec.length
        )));
    }
    if !spec.length.is_power_of_two() {
        return Err(BenchError::config(format!("stream length {} must be a power of two", spec.length)));
    }
    let workers = workers.max(1);
    let chunk_len = spec.length / n_chunks;
    let shift = chunk_len.trailing_zeros();
    let mask = (chunk_len - 1) as u32;
    let per = spec.size.div_ceil(workers);
    let mut ws: Vec<Worker> = (0..workers)
        .map(|w| {
            let size = per.min(spec.size.saturating_sub(w * per));
            Worker::new(spec, w, size, n_chunks)
        })
        .collect();
    let parallel = workers > 1;
    let input_hash = multiset_hash(ws.iter().flat_map(|w| w.cols.iter().map(|&c| c as u64)));
    let total_len: usize = ws.iter().map(|w| w.cols.len()).sum();

    let t_hist = timed(&mut ws, parallel, |w| w.histogram(shift));
    let hist_ok = ws.iter().map(|w| w.counts.iter().map(|&c| c as usize).sum::<usize>()).sum::<usize>() == spec.size;

    let t_prefix = timed(&mut ws, parallel, |w| w.prefix_sum());
    let prefix_ok = ws.iter().all(|w| *w.offsets.last().unwrap() as usize == w.cols.len());

    let t_reorder = timed(&mut ws, parallel, |w| w.reorder(shift, mask));
    let reorder_hash = multiset_hash(ws.iter().flat_map(|w| {
        (0..n_chunks).flat_map(move |k| {
            w.out_cols[w.chunk(k)]
                .iter()
                .map(move |&c| ((k * chunk_len) as u64) + c as u64)
        })
    }));
    let reorder_ok = reorder_hash == input_hash && total_len == spec.size;

    let t_dense = timed(&mut ws, parallel, |w| w.dense_accumulate());
    let t_sort = timed(&mut ws, parallel, |w| w.sort_accumulate());
    let exact = |s: f64| s == spec.size as f64;
    let dense_ok = exact(ws.iter().map(|w| w.dense_sum).sum());
    let sort_ok = exact(ws.iter().map(|w| w.sort_sum).sum()) && ws.iter().all(|w| w.dense_distinct == w.sort_distinct);

    let t_stream = timed(&mut ws, parallel, |w| w.stream());
    let stream_ok = ws.iter().all(|w| w.out_cols == w.cols);

    let avg_chunk = spec.size / n_chunks;
    let t_accum = match select_accumulator(avg_chunk, &AccumThresholds::default()) {
        AccumKind::Dense => t_dense,
        AccumKind::Sort => t_sort,
    };
    let t_total = t_hist + t_prefix + t_reorder + t_accum;
    let total_ok = hist_ok && prefix_ok && reorder_ok && dense_ok && sort_ok;

    let times = [t_hist, t_prefix, t_reorder, t_dense, t_sort, t_stream, t_total];
    let oks = [hist_ok, prefix_ok, reorder_ok, dense_ok, sort_ok, stream_ok, total_ok];
    Ok(STAGES
        .iter()
        .zip(times)
        .zip(oks)
        .map(|((name, seconds), ok)| BenchRecord {
            benchmark: (*name).to_owned(),
            size: spec.size,
            length: spec.length,
            n_chunks,
            workers,
            rep,
            seconds,
            rate: spec.size as f64 / seconds,
            checksum_ok: ok,
        })
        .collect())
}
