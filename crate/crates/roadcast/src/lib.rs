//! Accident-count forecasting over the US road-accident snapshot: CSV
//! ingest with schema validation, descriptive statistics tables, the
//! spatio-temporal feature pipeline, and a model training / evaluation
//! harness, all driven by the `roadcast` binary.
//!
//! Numeric model internals live in `roadcast-core`; this crate owns every
//! file format and the orchestration around them.

pub mod cache;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod eda;
pub mod error;
pub mod fixture;
pub mod frame_io;
pub mod ingest;
pub mod model_io;
pub mod report;

pub use error::AppError;
