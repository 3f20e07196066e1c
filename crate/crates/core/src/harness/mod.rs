//! Scenario-driven simulation: replaying a hand stream through the closed
//! loop, the platform-length experiment and its reports.

mod experiment;
mod report;
mod scenario;
mod sim;

pub use experiment::{
    estimate_length, run_experiment, run_trial, trial_seed, Execution, ExperimentConfig, ParticipantModel, TrialResult,
    DEFAULT_LENGTHS, PARTICIPANTS,
};
pub use report::{
    emit_report, mean_std, parse_csv, parse_results_json, summarize, to_csv, ModeSummary, ReportRow, Summary,
};
pub use scenario::{
    FingertipPath, HandSource, MembraneConfig, MeshSpec, PlantConfig, PlatformLayout, RenderMode, Scenario,
    TrajectorySpec, TransportKind,
};
pub use sim::{
    membrane_gap, run_replay, simulate, write_ndjson, CommandRecord, Metrics, ReplayOptions, ReplayOutput, Timing,
    TraceRecord, TwinLogRecord,
};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("file error: {0}")]
    File(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl HarnessError {
    /// Process exit status: 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::File(_) => 2,
            HarnessError::Runtime(_) => 3,
        }
    }
}
