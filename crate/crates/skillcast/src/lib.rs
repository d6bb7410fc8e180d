//! Skill-demand forecasting over job-advertisement data.
//!
//! The pipeline: ingest ads and employment statistics into monthly
//! skill-share panels (`market`), optionally group skills by embedding
//! similarity (`cluster`), transform panels into supervised windows
//! (`preprocess`), train small recurrent models for one-shot multi-month
//! forecasts (`forecast`), and score them (`metrics`). `synth` generates
//! seeded synthetic corpora so the whole chain can be exercised and verified
//! without proprietary data.

pub mod cluster;
pub mod error;
pub mod forecast;
pub mod market;
pub mod metrics;
pub mod months;
pub mod preprocess;
pub mod report;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
