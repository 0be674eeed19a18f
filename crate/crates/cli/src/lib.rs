//! Configuration, orchestration and reporting for the `sticky` binary.

pub mod config;
pub mod emit;
pub mod pipeline;
pub mod report;

pub use config::{parse_config, parse_config_str, ConfigError, Format, RunConfig};
pub use emit::emit;
pub use pipeline::{run_analyze, run_simulate, run_tail_study, run_verify, PipelineError, PlotData, RunOutput};
pub use report::{tolerances, Outcome, Verdict, VerificationReport, SCHEMA_VERSION};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const VERIFY_FAILED: i32 = 3;
    pub const IO: i32 = 4;
}
