//! Benchmark ingestion, synthetic systems and experiment orchestration for
//! the `mor-iha` command-line tool.

pub mod error;
pub mod ingest;
pub mod job;
pub mod mtx;
pub mod report;
pub mod synthetic;

pub use error::CliError;
pub use ingest::{ingest, SystemFiles};
pub use job::{run_job, InputSource, Job, JobFile, Method, ModeFlags, RunOutcome};
pub use report::{Report, ReportRow};
pub use synthetic::{make_synthetic, SyntheticKind};
