//! Quality metrics, preference models and rankings for 2D projections of
//! high-dimensional data.

pub mod affinity;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod generators;
pub mod metamap;
pub mod metrics;
pub mod models;
pub mod preferences;
pub mod scagnostics;
pub mod stats;
pub mod synthetic;

pub use data::{Dataset, Embedding, Technique};
pub use error::{Error, Result};
pub use metrics::Metric;
