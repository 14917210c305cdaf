//! Numerical building blocks shared by the analysis modules.

pub mod dist;
pub mod linalg;

mod descriptive;

pub use descriptive::{mean, median, median_mad, pearson, sample_variance, weighted_mean_var};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}
