//! Corpus analytics for promotional language in grant proposals.
//!
//! The crate is organized by pipeline stage:
//!
//! - [`corpus`]: documents, tokenization, sentence segmentation, I/O and a
//!   synthetic generator with a known funding model.
//! - [`lexicon`]: the promotional lexicon, neutral-synonym tables and
//!   word-rating lexicons.
//! - [`metrics`]: per-document densities and controls.
//! - [`validation`]: dictionary psychometrics and rater agreement.
//! - [`novelty`]: co-citation z-scores against a year-preserving null model
//!   and the per-grant innovativeness score.
//! - [`inference`]: logit, OLS and negative binomial fits, margins, BIC, VIF
//!   and the two-sample and binomial tests.
//! - [`experiment`]: synonym-substitution sentiment experiments and the
//!   measurement-error robustness sweeps.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiations.

pub mod corpus;
pub mod experiment;
pub mod inference;
pub mod lexicon;
pub mod metrics;
pub mod novelty;
pub mod scalar;
pub mod seed;
pub mod stats;
pub mod validation;

pub use scalar::Scalar;

pub type Design = inference::Design<f64>;
pub type Fit = inference::RegressionFit<f64>;
pub type ItemMatrix = validation::ItemMatrix<f64>;
pub type Matrix = stats::linalg::Matrix<f64>;
