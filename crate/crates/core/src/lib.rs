//! Exact and Monte-Carlo permanents of sparse matrices, split into
//! independent jobs and scheduled across workers by estimated cost.

pub mod approx;
pub mod datasets;
pub mod error;
pub mod exact;
pub mod io;
pub mod matrix;
pub mod runtime;
pub mod scalar;
pub mod schedule;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, IntMatrix, SparseMatrix};
pub use scalar::{FormatValue, Scalar, ScalarKind};

/// Seed used when neither `--seed` nor the environment variable is given.
pub const DEFAULT_SEED: u64 = 1729;

/// Environment variable read for the default seed.
pub const SEED_ENV: &str = "SPARSEPERM_SEED";
