//! Staged pipeline around `ecgrisk-core`: ingest, quality-gated segments,
//! features, pre/post statistics, nested-CV training and reports.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{exit_code, ExitKind};
pub use pipeline::{Pipeline, Stage};
