//! Library surface of the `commtrace` CLI: configuration handling and the
//! file-based pipeline stages, reusable from integration tests.

pub mod config;
pub mod stages;

pub use config::{Detector, PipelineConfig, Weighting};
pub use stages::{run_pipeline, DiagramOptions, Manifest};
