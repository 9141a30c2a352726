//! Differentially private summaries of sparse contingency tables.
//!
//! Noise is added with the two-sided geometric mechanism, and the summary is
//! then filtered and/or sampled. The shortcut summarizers never materialize
//! the `m - n` noisy zero cells, yet their output has the same distribution
//! as noising every cell first.

pub mod cli;
pub mod dyadic;
pub mod error;
pub mod harness;
pub mod noise;
pub mod query;
pub mod rng;
pub mod sketch;
pub mod summarize;
pub mod table;

pub use error::{Error, Result};
pub use noise::NoiseSpec;
pub use query::{answer, Mode, Query};
pub use rng::RngHandle;
pub use summarize::{summarize, MethodSpec, Summary};
pub use table::{DomainSpec, SparseTable};
