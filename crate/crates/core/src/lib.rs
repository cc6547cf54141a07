//! Sparse matrix-matrix multiplication with two-level locality generation.
//!
//! The crate is `no_std` + `alloc` at its core. The `std` feature (default)
//! adds wall-clock phase timings; `parallel` spreads rows and coarse-level
//! batches over the rayon pool.
//!
//! Module map:
//! - [`csr`], [`csc`], [`generate`]: storage, conversion and synthetic inputs.
//! - [`accum`]: dense and sort-merge accumulators and their selection policy.
//! - [`gustavson`]: row-by-row baselines and the reference oracle.
//! - [`magnus`]: chunk planning, row categorization, the fine- and
//!   coarse-level reordering algorithms and the full driver.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod accum;
pub mod csc;
pub mod csr;
pub mod error;
mod exec;
pub mod generate;
pub mod gustavson;
pub mod index;
pub mod magnus;
pub mod product;
pub mod rng;
mod sortnet;
mod timer;

pub use accum::{AccumKind, AccumThresholds, DenseAccumulator};
pub use csc::{csr_rows_to_csc, CscSubMatrix};
pub use csr::{csr_from_triplets, validate_csr, CsrMatrix};
pub use error::{CsrViolation, Error, Result};
pub use exec::parallel_available;
pub use generate::{gen_banded, gen_rmat, gen_uniform_random, BandedParams, ErParams, RmatParams, ValueMode};
pub use gustavson::{spgemm_gustavson, spgemm_reference, Baseline, RowStats};
pub use index::{col_index_width, ColIndex, Payload, Phase};
pub use magnus::{spgemm_magnus, ChunkPlan, MagnusOptions, RowCategories, SystemParams};

pub use product::SpgemmResult;
