//! Configuration, staged pipeline, reports and CSV export around `ccembed-core`.

pub mod config;
pub mod export;
pub mod pipeline;
pub mod report;
pub mod suite;

pub use config::{ConfigError, PipelineConfig};
pub use pipeline::{run_pipeline, Artifacts, PipelineOutcome, StopAfter};
pub use report::{Bound, StageRecord, Verdict, VerificationReport, EXIT_CONFIG};
