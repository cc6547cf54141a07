//! The `spgemm` command: one warm-up run, then `reps` timed runs of one
//! algorithm, with per-run and summary records.

use std::fmt;
use std::str::FromStr;

use magnus_core::gustavson::REFERENCE_MAX_COLS;
use magnus_core::product::{counter, phase};
use magnus_core::{spgemm_gustavson, spgemm_magnus, spgemm_reference, Baseline, ColIndex, CsrMatrix};
use magnus_core::{MagnusOptions, SpgemmResult, SystemParams};
use serde::Serialize;

use crate::bound::{ideal_bound, IdealBoundInputs};
use crate::error::{BenchError, Result};
use crate::matrix::AnyCsr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algo {
    GustavsonDense,
    Esc,
    Magnus,
    MagnusFineOnly,
    Reference,
}

impl Algo {
    pub const ALL: [Algo; 5] = [
        Algo::GustavsonDense,
        Algo::Esc,
        Algo::Magnus,
        Algo::MagnusFineOnly,
        Algo::Reference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::GustavsonDense => "gustavson-dense",
            Algo::Esc => "esc",
            Algo::Magnus => "magnus",
            Algo::MagnusFineOnly => "magnus-fine-only",
            Algo::Reference => "reference",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algo::ALL.iter().map(|a| a.name()).collect();
                BenchError::config(format!("unknown algorithm '{s}', expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub input: String,
    pub algo: Algo,
    pub reps: usize,
    pub threads: usize,
    pub sys: SystemParams,
    /// When set, each record carries the ideal bound and the ratio to it.
    pub bandwidth: Option<f64>,
    pub verify: bool,
}

/// One timed run, or a summary (`rep` = `avg`, `min`, `std`) over all runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpgemmRecord {
    pub input: String,
    pub algo: String,
    pub threads: usize,
    pub rep: String,
    pub setup: f64,
    pub symbolic: f64,
    pub numeric: f64,
    pub canonicalize: f64,
    pub total: f64,
    pub rows_sort: u64,
    pub rows_dense: u64,
    pub rows_fine: u64,
    pub rows_coarse: u64,
    pub coarse_batches: u64,
    pub n_inter_prod: u64,
    pub nnz_c: u64,
    pub ideal_seconds: Option<f64>,
    pub ideal_ratio: Option<f64>,
    pub verified: String,
}

/// Runs `algo` on one pair of matrices with the given worker setting.
pub fn spgemm_with<I: ColIndex>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    algo: Algo,
    sys: &SystemParams,
    parallel: bool,
) -> Result<SpgemmResult<I>> {
    let opts = |force| MagnusOptions {
        force_fine_only: force,
        parallel,
        ..MagnusOptions::default()
    };
    Ok(match algo {
        Algo::GustavsonDense => spgemm_gustavson(a, b, Baseline::Dense, parallel)?,
        Algo::Esc => spgemm_gustavson(a, b, Baseline::Esc, parallel)?,
        Algo::Magnus => spgemm_magnus(a, b, sys, &opts(false))?,
        Algo::MagnusFineOnly => spgemm_magnus(a, b, sys, &opts(true))?,
        Algo::Reference => {
            let t = std::time::Instant::now();
            let c = spgemm_reference(a, b)?;
            let secs = t.elapsed().as_secs_f64();
            let mut r = SpgemmResult {
                c,
                timings: Default::default(),
                counters: Default::default(),
            };
            r.timings.insert(phase::NUMERIC, secs);
            r.timings.insert(phase::TOTAL, secs);
            let inter: u64 = a.col().iter().map(|&j| b.row_nnz(j.to_usize()) as u64).sum();
            r.counters.insert(counter::INTER_PROD_SIZE, inter);
            r.counters.insert(counter::NNZ_C, r.c.nnz() as u64);
            r
        }
    })
}

/// Independent result to compare against: the reference when the column
/// count allows, otherwise whichever Gustavson baseline is not under test.
fn oracle<I: ColIndex>(a: &CsrMatrix<I>, b: &CsrMatrix<I>, algo: Algo, parallel: bool) -> Result<CsrMatrix<I>> {
    if b.n_cols() <= REFERENCE_MAX_COLS {
        return Ok(spgemm_reference(a, b)?);
    }
    let baseline = if algo == Algo::Esc { Baseline::Dense } else { Baseline::Esc };
    Ok(spgemm_gustavson(a, b, baseline, parallel)?.c)
}

fn record<I>(cfg: &RunConfig, rep: String, r: &SpgemmResult<I>, ideal: Option<f64>, verified: &str) -> SpgemmRecord {
    let total = r.timing(phase::TOTAL);
    SpgemmRecord {
        input: cfg.input.clone(),
        algo: cfg.algo.name().to_owned(),
        threads: cfg.threads,
        rep,
        setup: r.timing(phase::SETUP),
        symbolic: r.timing(phase::SYMBOLIC),
        numeric: r.timing(phase::NUMERIC),
        canonicalize: r.timing(phase::CANONICALIZE),
        total,
        rows_sort: r.counter(counter::ROWS_SORT),
        rows_dense: r.counter(counter::ROWS_DENSE),
        rows_fine: r.counter(counter::ROWS_FINE),
        rows_coarse: r.counter(counter::ROWS_COARSE),
        coarse_batches: r.counter(counter::COARSE_BATCHES),
        n_inter_prod: r.counter(counter::INTER_PROD_SIZE),
        nnz_c: r.counter(counter::NNZ_C),
        ideal_seconds: ideal,
        ideal_ratio: ideal.map(|t| total / t),
        verified: verified.to_owned(),
    }
}

fn summary(runs: &[SpgemmRecord]) -> Vec<SpgemmRecord> {
    let n = runs.len() as f64;
    let field = |r: &SpgemmRecord, k: usize| [r.setup, r.symbolic, r.numeric, r.canonicalize, r.total][k];
    let stat = |name: &str, f: &dyn Fn(usize) -> f64| {
        let mut s = runs[0].clone();
        s.rep = name.to_owned();
        s.setup = f(0);
        s.symbolic = f(1);
        s.numeric = f(2);
        s.canonicalize = f(3);
        s.total = f(4);
        s.ideal_ratio = s.ideal_seconds.map(|t| s.total / t);
        s
    };
    let mean = |k: usize| runs.iter().map(|r| field(r, k)).sum::<f64>() / n;
    let min = |k: usize| runs.iter().map(|r| field(r, k)).fold(f64::INFINITY, f64::min);
    let std = |k: usize| {
        let m = mean(k);
        (runs.iter().map(|r| (field(r, k) - m).powi(2)).sum::<f64>() / n).sqrt()
    };
    let mut out = vec![stat("avg", &mean), stat("min", &min), stat("std", &std)];
    // A ratio of standard deviations is meaningless.
    out[2].ideal_ratio = None;
    out
}

fn run_typed<I: ColIndex>(a: &CsrMatrix<I>, b: &CsrMatrix<I>, cfg: &RunConfig) -> Result<Vec<SpgemmRecord>> {
    let parallel = cfg.threads > 1;
    let warm = spgemm_with(a, b, cfg.algo, &cfg.sys, parallel)?;
    let verified = if cfg.verify {
        if warm.c.bit_identical(&oracle(a, b, cfg.algo, parallel)?) {
            "PASS"
        } else {
            "FAIL"
        }
    } else {
        "SKIP"
    };
    let ideal = match cfg.bandwidth {
        Some(bw) => Some(ideal_bound(&IdealBoundInputs::from_product(a, &warm, bw))?.seconds),
        None => None,
    };
    drop(warm);
    let mut runs = Vec::with_capacity(cfg.reps + 3);
    for rep in 0..cfg.reps {
        let r = spgemm_with(a, b, cfg.algo, &cfg.sys, parallel)?;
        runs.push(record(cfg, rep.to_string(), &r, ideal, verified));
    }
    let stats = summary(&runs);
    runs.extend(stats);
    Ok(runs)
}

/// Warm-up plus `cfg.reps` timed runs on a dedicated pool of `cfg.threads`
/// workers. Both operands are brought to a common index width.
pub fn run_spgemm_command(a: &AnyCsr, b: &AnyCsr, cfg: &RunConfig) -> Result<Vec<SpgemmRecord>> {
    if cfg.reps == 0 {
        return Err(BenchError::config("repetitions must be at least 1"));
    }
    if cfg.threads == 0 {
        return Err(BenchError::config("thread count must be at least 1"));
    }
    cfg.sys.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| BenchError::config(format!("cannot start {} workers: {e}", cfg.threads)))?;
    pool.install(|| match (a, b) {
        (AnyCsr::U32(a), AnyCsr::U32(b)) => run_typed(a, b, cfg),
        _ => run_typed(&a.clone().into_u64(), &b.clone().into_u64(), cfg),
    })
}
