//! Batch CLI and HTTP service around the `drjudge` library: ingest datasets,
//! generate projections, measure, train, evaluate, rank and build metamaps.

pub mod cli;
pub mod config;
pub mod error;
pub mod http;
pub mod pipeline;
pub mod store;

pub use config::PipelineConfig;
pub use error::{Result, ServiceError};
pub use store::Store;
