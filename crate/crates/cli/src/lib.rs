//! The `spt` pipeline: configuration, stages, manifests and result tables.

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod stages;
pub mod tables;

pub use config::{PipelineConfig, Stage};
pub use manifest::{Manifest, StageRecord};
pub use pipeline::{run_pipeline, RunOptions};
