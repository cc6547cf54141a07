//! Per-row choice between sorting, a dense window, the fine level alone and
//! the coarse level followed by the fine level.

use alloc::vec::Vec;

use super::plan::{fine_level_fits, ChunkPlan, SystemParams};
use crate::accum::{select_accumulator, AccumKind, AccumThresholds};
use crate::gustavson::RowStats;
use crate::index::Phase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowCategory {
    Sort,
    Dense,
    FineLevel,
    CoarseLevel,
}

/// Rows of `C` split by category, each list ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RowCategories {
    pub sort_rows: Vec<usize>,
    pub dense_rows: Vec<usize>,
    pub fine_rows: Vec<usize>,
    pub coarse_rows: Vec<usize>,
}

impl RowCategories {
    pub fn rows(&self, category: RowCategory) -> &[usize] {
        match category {
            RowCategory::Sort => &self.sort_rows,
            RowCategory::Dense => &self.dense_rows,
            RowCategory::FineLevel => &self.fine_rows,
            RowCategory::CoarseLevel => &self.coarse_rows,
        }
    }

    pub fn len(&self) -> usize {
        self.sort_rows.len() + self.dense_rows.len() + self.fine_rows.len() + self.coarse_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Category of every row, for rows `0..n_rows`.
    pub fn per_row(&self, n_rows: usize) -> Vec<Option<RowCategory>> {
        let mut out = alloc::vec![None; n_rows];
        for cat in [
            RowCategory::Sort,
            RowCategory::Dense,
            RowCategory::FineLevel,
            RowCategory::CoarseLevel,
        ] {
            for &r in self.rows(cat) {
                out[r] = Some(cat);
            }
        }
        out
    }
}

/// First matching rule wins:
/// 1. empty or short intermediate product: sort;
/// 2. the column window `[min_col, max_col]` fits a dense accumulator in L2;
/// 3. the fine level over all of `C`'s columns fits in L2 (measured with
///    symbolic slot size), or the coarse level is disabled;
/// 4. otherwise the coarse level.
pub fn categorize_row(stats: &RowStats, plan: &ChunkPlan, sys: &SystemParams, thresholds: &AccumThresholds) -> RowCategory {
    if stats.is_empty() || select_accumulator(stats.inter_size as usize, thresholds) == AccumKind::Sort {
        return RowCategory::Sort;
    }
    let span = stats.span();
    if span <= u32::MAX as usize && span.saturating_mul(plan.s_dense_accum) <= sys.l2_bytes {
        return RowCategory::Dense;
    }
    let s_acc = sys.s_dense_accum(Phase::Symbolic);
    if !plan.coarse_allowed || fine_level_fits(plan.m_c, s_acc, plan.s_chunk_fine, sys.l2_bytes) {
        return RowCategory::FineLevel;
    }
    RowCategory::CoarseLevel
}

pub fn categorize_rows(
    stats: &[RowStats],
    plan: &ChunkPlan,
    sys: &SystemParams,
    thresholds: &AccumThresholds,
) -> RowCategories {
    let mut cats = RowCategories::default();
    for (i, s) in stats.iter().enumerate() {
        match categorize_row(s, plan, sys, thresholds) {
            RowCategory::Sort => cats.sort_rows.push(i),
            RowCategory::Dense => cats.dense_rows.push(i),
            RowCategory::FineLevel => cats.fine_rows.push(i),
            RowCategory::CoarseLevel => cats.coarse_rows.push(i),
        }
    }
    cats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnus::plan::{compute_chunk_plan, compute_chunk_plan_fine_only};

    fn stats(inter: u64, lo: usize, hi: usize) -> RowStats {
        RowStats {
            inter_size: inter,
            min_col: lo,
            max_col: hi,
        }
    }

    #[test]
    fn rules_in_order() {
        let sys = SystemParams {
            l2_bytes: 4096,
            ..SystemParams::default()
        };
        let th = AccumThresholds::default();
        let small = compute_chunk_plan(&sys, 1 << 12, Phase::Numeric);
        assert_eq!(categorize_row(&RowStats::EMPTY, &small, &sys, &th), RowCategory::Sort);
        assert_eq!(categorize_row(&stats(255, 0, 4000), &small, &sys, &th), RowCategory::Sort);
        // 455 slots of 9 bytes fit in 4 KiB, 456 do not.
        assert_eq!(categorize_row(&stats(256, 10, 464), &small, &sys, &th), RowCategory::Dense);
        assert_eq!(categorize_row(&stats(256, 10, 465), &small, &sys, &th), RowCategory::FineLevel);

        let wide = compute_chunk_plan(&sys, 1 << 16, Phase::Numeric);
        assert_eq!(categorize_row(&stats(300, 0, 60000), &wide, &sys, &th), RowCategory::CoarseLevel);
        let forced = compute_chunk_plan_fine_only(&sys, 1 << 16, Phase::Numeric);
        assert_eq!(categorize_row(&stats(300, 0, 60000), &forced, &sys, &th), RowCategory::FineLevel);
    }

    #[test]
    fn empty_rows_sort_even_without_sort_threshold() {
        let sys = SystemParams::default();
        let th = AccumThresholds {
            sort_dense_crossover: 0,
            ..AccumThresholds::default()
        };
        let plan = compute_chunk_plan(&sys, 64, Phase::Numeric);
        assert_eq!(categorize_row(&RowStats::EMPTY, &plan, &sys, &th), RowCategory::Sort);
        assert_eq!(categorize_row(&stats(1, 3, 3), &plan, &sys, &th), RowCategory::Dense);
    }

    #[test]
    fn lists_partition_rows() {
        let sys = SystemParams {
            l2_bytes: 4096,
            ..SystemParams::default()
        };
        let plan = compute_chunk_plan(&sys, 1 << 16, Phase::Numeric);
        let rows = [
            stats(10, 0, 5),
            stats(300, 0, 100),
            RowStats::EMPTY,
            stats(300, 0, 60000),
        ];
        let cats = categorize_rows(&rows, &plan, &sys, &AccumThresholds::default());
        assert_eq!(cats.sort_rows, [0, 2]);
        assert_eq!(cats.dense_rows, [1]);
        assert!(cats.fine_rows.is_empty());
        assert_eq!(cats.coarse_rows, [3]);
        assert_eq!(cats.len(), 4);
        assert_eq!(cats.per_row(4)[3], Some(RowCategory::CoarseLevel));
    }
}
