//! Numeric core for accident-count forecasting: regression trees and their
//! ensembles (random forest, AdaBoost.R2, histogram gradient boosting,
//! stacking), coordinate-descent regularized linear models, a small LSTM
//! regressor, and the evaluation machinery (metrics, k-fold CV, random
//! hyperparameter search) that compares them.
//!
//! The crate is `no_std`-compatible (with `alloc`); all file formats, CSV
//! ingestion and the CLI live in the companion `roadcast` crate. Everything
//! here is deterministic: models are seeded explicitly and fitting the same
//! frame with the same config twice produces bit-identical results.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adaboost;
pub mod cv;
pub mod encode;
pub mod error;
pub mod forest;
pub mod frame;
pub mod gbdt;
pub mod linear;
pub mod lstm;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod search;
pub mod stack;
pub mod tree;

pub use error::CoreError;
pub use frame::{ColumnKind, ColumnMeta, FeatureFrame, RowKey, SplitSpec, SplitStrategy};
pub use model::{fit, ModelSpec, TrainedModel};
