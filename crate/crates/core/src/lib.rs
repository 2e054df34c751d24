//! Interpretable and causal analysis of tabular sales data.
//!
//! The crate covers the full recipe: load and prune features ([`frame`],
//! [`stats`], [`pca`]), fit tree ensembles ([`models`]), attribute their
//! predictions with exact Shapley values ([`attribution`]), cluster redundant
//! features ([`redundancy`]) and estimate causal slopes with cross-fitted
//! double machine learning ([`causal`]). [`synth`] generates data from
//! structural causal models with known ground truth.

pub mod attribution;
pub mod causal;
pub mod error;
pub mod frame;
pub mod models;
pub mod pca;
pub mod redundancy;
pub mod seed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use frame::Frame;
