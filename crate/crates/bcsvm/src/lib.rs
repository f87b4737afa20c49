//! Cascade SVM training toolkit.
//!
//! The crate trains binary soft-margin kernel SVMs with a from-scratch SMO
//! solver and scales them to larger datasets by cascading: partition the data,
//! train the parts in parallel, keep only the support vectors, and repeat per
//! a layer plan. Two partitioning strategies are provided — uniform random
//! (`csvm`) and class-balanced (`bcsvm`) — together with an exact
//! combinatorial calculator for the probability that a global support vector
//! survives the first cascade layer under either strategy.

pub mod analysis;
pub mod cascade;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod kernel;
mod rng;
pub mod solver;
pub mod synth;

pub use dataset::{Dataset, Sample, SparseVector};
pub use error::Error;
pub use kernel::{KernelCache, KernelSpec};
pub use solver::{smo_train, SolverConfig, SvmModel};

pub type Result<T> = std::result::Result<T, Error>;
