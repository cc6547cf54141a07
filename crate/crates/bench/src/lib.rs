//! Standard-library companion to `magnus-core`: matrix file formats, host
//! detection, building-block microbenchmarks, the ideal-bound model and the
//! command implementations behind the `magnus` binary.

pub mod bandwidth;
pub mod binfmt;
pub mod bound;
pub mod error;
pub mod matrix;
pub mod microbench;
pub mod mtx;
pub mod report;
pub mod run;
pub mod source;
pub mod sysinfo;
pub mod verify;

pub use error::{BenchError, Result};
pub use matrix::AnyCsr;
