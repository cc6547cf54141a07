use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::categorize::{categorize_rows, RowCategories};
use super::coarse::{build_coarse_batches, coarse_level_batch, CoarseWorkspace};
use super::fine::{fine_level_row, FineWorkspace, RowSink};
use super::plan::{compute_chunk_plan, compute_chunk_plan_fine_only, ChunkPlan, SystemParams};
use crate::accum::{sort_accumulate_into, sort_count_distinct, AccumThresholds, DenseAccumulator, SortScratch};
use crate::csr::CsrMatrix;
use crate::error::Result;
use crate::exec::for_each_with;
use crate::gustavson::{row_intermediate_stats, RowStats};
use crate::index::{ColIndex, Payload, Phase};
use crate::product::{
    alloc_output, canonicalize_rows, check_dims, check_row_ptr, counter, counts_to_row_ptr, finish_timings, phase,
    row_writers, RowWriter, SpgemmResult,
};
use crate::timer::Stopwatch;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MagnusOptions {
    /// Disable the coarse level; rows that would need it use the fine level
    /// over the full column range.
    pub force_fine_only: bool,
    pub thresholds: AccumThresholds,
    pub parallel: bool,
}

impl Default for MagnusOptions {
    fn default() -> Self {
        Self {
            force_fine_only: false,
            thresholds: AccumThresholds::default(),
            parallel: true,
        }
    }
}

/// Row statistics, plans and categories shared by both phases.
#[derive(Clone, Debug)]
pub struct MagnusSetup {
    pub stats: Vec<RowStats>,
    pub symbolic_plan: ChunkPlan,
    pub numeric_plan: ChunkPlan,
    /// Computed with the numeric plan, whose dense slots are the larger of
    /// the two, and reused by the symbolic phase.
    pub categories: RowCategories,
}

impl MagnusSetup {
    pub fn plan(&self, phase: Phase) -> &ChunkPlan {
        match phase {
            Phase::Symbolic => &self.symbolic_plan,
            Phase::Numeric => &self.numeric_plan,
        }
    }
}

pub fn magnus_setup<I: ColIndex>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    sys: &SystemParams,
    opts: &MagnusOptions,
) -> Result<MagnusSetup> {
    sys.validate()?;
    check_dims(a, b)?;
    let stats = row_intermediate_stats(a, b, opts.parallel)?;
    let planner = if opts.force_fine_only {
        compute_chunk_plan_fine_only
    } else {
        compute_chunk_plan
    };
    let symbolic_plan = planner(sys, b.n_cols(), Phase::Symbolic);
    let numeric_plan = planner(sys, b.n_cols(), Phase::Numeric);
    let categories = categorize_rows(&stats, &numeric_plan, sys, &opts.thresholds);
    Ok(MagnusSetup {
        stats,
        symbolic_plan,
        numeric_plan,
        categories,
    })
}

/// Unsorted output rows of the numeric phase.
#[derive(Clone, Debug)]
pub struct NumericRows<I> {
    pub col: Vec<I>,
    pub val: Vec<f64>,
    pub coarse_batches: usize,
}

/// Exact nnz of every row of `C`, returned as a row pointer.
pub fn magnus_symbolic<I: ColIndex>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    setup: &MagnusSetup,
    sys: &SystemParams,
    opts: &MagnusOptions,
) -> Result<Vec<usize>> {
    check_dims(a, b)?;
    let mut counts = vec![0usize; a.n_rows()];
    let sinks = counts.iter_mut().map(CountSink).collect();
    run_phase::<I, (), _>(a, b, setup, Phase::Symbolic, sys, opts, sinks)?;
    Ok(counts_to_row_ptr(&counts))
}

/// Fills the rows laid out by `row_ptr`. Entries within a row are not
/// sorted.
pub fn magnus_numeric<I: ColIndex>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    row_ptr: &[usize],
    setup: &MagnusSetup,
    sys: &SystemParams,
    opts: &MagnusOptions,
) -> Result<NumericRows<I>> {
    check_dims(a, b)?;
    check_row_ptr(row_ptr, a.n_rows())?;
    let (mut col, mut val) = alloc_output::<I>(row_ptr);
    let sinks = row_writers(row_ptr, &mut col, &mut val)
        .into_iter()
        .map(WriteSink)
        .collect();
    let coarse_batches = run_phase::<I, f64, _>(a, b, setup, Phase::Numeric, sys, opts, sinks)?;
    Ok(NumericRows {
        col,
        val,
        coarse_batches,
    })
}

/// `C = A·B` with MAGNUS: setup, symbolic, numeric and canonicalization,
/// each timed.
pub fn spgemm_magnus<I: ColIndex>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    sys: &SystemParams,
    opts: &MagnusOptions,
) -> Result<SpgemmResult<I>> {
    let mut timings = BTreeMap::new();
    let clock = Stopwatch::start();
    let setup = magnus_setup(a, b, sys, opts)?;
    timings.insert(phase::SETUP, clock.seconds());

    let clock = Stopwatch::start();
    let row_ptr = magnus_symbolic(a, b, &setup, sys, opts)?;
    timings.insert(phase::SYMBOLIC, clock.seconds());

    let clock = Stopwatch::start();
    let NumericRows {
        mut col,
        mut val,
        coarse_batches,
    } = magnus_numeric(a, b, &row_ptr, &setup, sys, opts)?;
    timings.insert(phase::NUMERIC, clock.seconds());

    let clock = Stopwatch::start();
    canonicalize_rows(&row_ptr, &mut col, &mut val, opts.parallel);
    timings.insert(phase::CANONICALIZE, clock.seconds());
    finish_timings(&mut timings);

    let c = CsrMatrix::from_parts_unchecked(a.n_rows(), b.n_cols(), row_ptr, col, val, true);
    let cats = &setup.categories;
    let mut counters = BTreeMap::new();
    counters.insert(counter::INTER_PROD_SIZE, setup.stats.iter().map(|s| s.inter_size).sum());
    counters.insert(counter::NNZ_C, c.nnz() as u64);
    counters.insert(counter::ROWS_SORT, cats.sort_rows.len() as u64);
    counters.insert(counter::ROWS_DENSE, cats.dense_rows.len() as u64);
    counters.insert(counter::ROWS_FINE, cats.fine_rows.len() as u64);
    counters.insert(counter::ROWS_COARSE, cats.coarse_rows.len() as u64);
    counters.insert(counter::COARSE_BATCHES, coarse_batches as u64);
    counters.insert(counter::USE_COARSE, setup.numeric_plan.use_coarse as u64);
    Ok(SpgemmResult { c, timings, counters })
}

trait PhaseSink<V>: RowSink<V> + Send {
    fn finish(self, row: usize) -> Result<()>;
}

struct CountSink<'a>(&'a mut usize);

impl RowSink<()> for CountSink<'_> {
    #[inline(always)]
    fn push(&mut self, _: usize, _: ()) {
        *self.0 += 1;
    }

    #[inline(always)]
    fn add_count(&mut self, n: usize) {
        *self.0 += n;
    }
}

impl PhaseSink<()> for CountSink<'_> {
    fn finish(self, _: usize) -> Result<()> {
        Ok(())
    }
}

struct WriteSink<'a, I>(RowWriter<'a, I>);

impl<I: ColIndex> RowSink<f64> for WriteSink<'_, I> {
    #[inline(always)]
    fn push(&mut self, col: usize, val: f64) {
        self.0.push(I::from_usize(col), val);
    }

    fn add_count(&mut self, _: usize) {
        unreachable!("numeric sink received a symbolic count")
    }
}

impl<I: ColIndex> PhaseSink<f64> for WriteSink<'_, I> {
    fn finish(self, row: usize) -> Result<()> {
        self.0.finish(row)
    }
}

enum Work<S> {
    Sort(usize, S),
    Dense(usize, S),
    Fine(usize, S),
    Coarse(Vec<usize>, Vec<S>),
}

struct Workspace<I, V> {
    cols: Vec<I>,
    vals: Vec<V>,
    sort: SortScratch<I>,
    window: DenseAccumulator<u32, V>,
    fine: FineWorkspace<V>,
    coarse: CoarseWorkspace<I, V>,
}

impl<I: ColIndex, V: Payload> Workspace<I, V> {
    fn new() -> Self {
        Self {
            cols: Vec::new(),
            vals: Vec::new(),
            sort: SortScratch::new(),
            window: DenseAccumulator::new(0),
            fine: FineWorkspace::new(),
            coarse: CoarseWorkspace::new(),
        }
    }
}

/// Runs every row once, category by category, with one workspace per
/// worker. Returns the number of coarse-level batches.
fn run_phase<I: ColIndex, V: Payload, S: PhaseSink<V>>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    setup: &MagnusSetup,
    phase: Phase,
    sys: &SystemParams,
    opts: &MagnusOptions,
    sinks: Vec<S>,
) -> Result<usize> {
    let plan = setup.plan(phase);
    let cats = &setup.categories;
    let element_bytes = I::BYTES + core::mem::size_of::<V>();
    let batches = build_coarse_batches(&cats.coarse_rows, &setup.stats, plan, sys, element_bytes)?;
    let n_batches = batches.len();

    let mut slots: Vec<Option<S>> = sinks.into_iter().map(Some).collect();
    let mut take = |r: usize| slots[r].take().expect("row listed in two categories");
    let mut work = Vec::with_capacity(cats.len());
    work.extend(cats.sort_rows.iter().map(|&r| Work::Sort(r, take(r))));
    work.extend(cats.dense_rows.iter().map(|&r| Work::Dense(r, take(r))));
    work.extend(cats.fine_rows.iter().map(|&r| Work::Fine(r, take(r))));
    for batch in batches {
        let batch_sinks = batch.iter().map(|&r| take(r)).collect();
        work.push(Work::Coarse(batch, batch_sinks));
    }
    debug_assert!(slots.iter().all(Option::is_none));

    let thresholds = &opts.thresholds;
    for_each_with(work, opts.parallel, Workspace::<I, V>::new, |ws, item| match item {
        Work::Sort(r, mut sink) => {
            sort_row(a, b, r, ws, &mut sink);
            sink.finish(r)
        }
        Work::Dense(r, mut sink) => {
            dense_window_row(a, b, r, &setup.stats[r], ws, &mut sink);
            sink.finish(r)
        }
        Work::Fine(r, mut sink) => {
            fine_level_row(a, b, r, &plan.fine_only, thresholds, &mut ws.fine, &mut sink);
            sink.finish(r)
        }
        Work::Coarse(batch, mut sinks) => {
            coarse_level_batch(a, b, &batch, plan, thresholds, &mut ws.coarse, &mut ws.fine, &mut sinks);
            batch.iter().zip(sinks).try_for_each(|(&r, s)| s.finish(r))
        }
    })?;
    Ok(n_batches)
}

fn sort_row<I: ColIndex, V: Payload, S: RowSink<V>>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    row: usize,
    ws: &mut Workspace<I, V>,
    sink: &mut S,
) {
    ws.cols.clear();
    ws.vals.clear();
    for (&j, &av) in a.row_cols(row).iter().zip(a.row_vals(row)) {
        let j = j.to_usize();
        ws.cols.extend_from_slice(b.row_cols(j));
        if V::NUMERIC {
            ws.vals.extend(b.row_vals(j).iter().map(|&bv| V::product(av, bv)));
        }
    }
    if V::NUMERIC {
        sort_accumulate_into(&ws.cols, &ws.vals, &mut ws.sort, |c, v| sink.push(c.to_usize(), v));
    } else {
        sink.add_count(sort_count_distinct(&ws.cols, &mut ws.sort));
    }
}

/// Dense accumulation over the row's own column window.
fn dense_window_row<I: ColIndex, V: Payload, S: RowSink<V>>(
    a: &CsrMatrix<I>,
    b: &CsrMatrix<I>,
    row: usize,
    stats: &RowStats,
    ws: &mut Workspace<I, V>,
    sink: &mut S,
) {
    let lo = stats.min_col;
    ws.window.reserve_capacity(stats.span());
    let acc = &mut ws.window;
    if V::NUMERIC {
        for (&j, &av) in a.row_cols(row).iter().zip(a.row_vals(row)) {
            let j = j.to_usize();
            for (&k, &bv) in b.row_cols(j).iter().zip(b.row_vals(j)) {
                acc.insert((k.to_usize() - lo) as u32, V::product(av, bv));
            }
        }
        acc.drain(|c, v| sink.push(lo + c as usize, v));
    } else {
        let mut count = 0;
        for &j in a.row_cols(row) {
            for &k in b.row_cols(j.to_usize()) {
                count += acc.mark((k.to_usize() - lo) as u32) as usize;
            }
        }
        for &j in a.row_cols(row) {
            for &k in b.row_cols(j.to_usize()) {
                acc.unmark((k.to_usize() - lo) as u32);
            }
        }
        sink.add_count(count);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csr::csr_from_triplets;
    use crate::generate::{gen_uniform_random, ErParams, ValueMode};
    use crate::gustavson::spgemm_reference;

    fn check(a: &CsrMatrix<u32>, b: &CsrMatrix<u32>, sys: &SystemParams, opts: &MagnusOptions) -> SpgemmResult<u32> {
        let got = spgemm_magnus(a, b, sys, opts).unwrap();
        let want = spgemm_reference(a, b).unwrap();
        assert!(got.c.bit_identical(&want));
        got
    }

    #[test]
    fn small_product() {
        let a = csr_from_triplets::<u32>(&[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)], 2, 3).unwrap();
        let b = csr_from_triplets::<u32>(&[(0, 1, 4.0), (1, 0, 5.0), (2, 1, 6.0)], 3, 2).unwrap();
        let r = check(&a, &b, &SystemParams::default(), &MagnusOptions::default());
        assert_eq!(r.c.row_cols(0), [1]);
        assert_eq!(r.c.row_vals(0), [16.0]);
        assert_eq!(r.counter(counter::ROWS_SORT), 2);
    }

    #[test]
    fn every_category_on_toy_cache() {
        let sys = SystemParams {
            l2_bytes: 4096,
            memory_budget_bytes: 1 << 14,
            ..SystemParams::default()
        };
        let a = gen_uniform_random(&ErParams::new(24, 24, 12, 1).values(ValueMode::Uniform)).unwrap();
        let b = gen_uniform_random(&ErParams::new(24, 1 << 16, 40, 2).values(ValueMode::Uniform)).unwrap();
        let opts = MagnusOptions {
            parallel: false,
            ..MagnusOptions::default()
        };
        let r = check(&a, &b, &sys, &opts);
        assert!(r.counter(counter::ROWS_COARSE) > 0);
        assert!(r.counter(counter::COARSE_BATCHES) > 1);

        let forced = MagnusOptions {
            force_fine_only: true,
            ..opts
        };
        let r = check(&a, &b, &sys, &forced);
        assert_eq!(r.counter(counter::ROWS_COARSE), 0);
        assert!(r.counter(counter::ROWS_FINE) > 0);

        let b = gen_uniform_random(&ErParams::new(24, 300, 40, 3).values(ValueMode::Uniform)).unwrap();
        let r = check(&a, &b, &sys, &opts);
        assert!(r.counter(counter::ROWS_DENSE) > 0);
    }

    #[test]
    fn timings_sum_to_total() {
        let a = CsrMatrix::<u32>::identity(8);
        let r = check(&a, &a, &SystemParams::default(), &MagnusOptions::default());
        let sum = r.timing(phase::SETUP) + r.timing(phase::SYMBOLIC) + r.timing(phase::NUMERIC);
        assert!((r.timing(phase::TOTAL) - sum).abs() < 1e-12);
    }
}
