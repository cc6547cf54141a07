//! Two-level locality generation for SpGEMM.
//!
//! Rows of `C` are categorized by the size and column span of their
//! intermediate product. Short rows are sorted, rows with a narrow span use
//! a dense window, and the rest are reordered into cache-sized column chunks
//! before accumulation: directly at the fine level, or first in coarse
//! batches when even the optimal fine level would overflow L2.

pub mod categorize;
pub mod coarse;
mod driver;
pub mod fine;
pub mod plan;

pub use categorize::{categorize_row, categorize_rows, RowCategories, RowCategory};
pub use coarse::{build_coarse_batches, coarse_level_batch, coarse_reorder, CoarseWorkspace};
pub use driver::{magnus_numeric, magnus_setup, magnus_symbolic, spgemm_magnus, MagnusOptions, MagnusSetup, NumericRows};
pub use fine::{fine_accumulate, fine_level_chunk, fine_level_row, fine_reorder, FineWorkspace, RowSink};
pub use plan::{compute_chunk_plan, compute_chunk_plan_fine_only, ChunkPlan, FineParams, SystemParams};
