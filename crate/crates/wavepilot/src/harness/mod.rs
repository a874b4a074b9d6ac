//! Mission runner, reference generator, metrics engine, configuration and
//! CSV I/O, and the batch experiment matrix.

mod config;
mod csvio;
mod matrix;
mod metrics;
mod mission;
mod reference;

pub use config::{
    parse_controller, MissionSpec, PowerConfig, RunOptions, ScenarioConfig, SeaConfig, SeaSource,
    WaveCase,
};
pub use csvio::{mission_csv, write_mission_csv, write_summary, MISSION_HEADER};
pub use matrix::{format_summary, run_matrix, CellResult, MatrixSummary, ReductionRow};
pub use metrics::{compute_metrics, MetricsReport};
pub use mission::{run_mission, LogRow, MissionLog, MissionOutcome, SolveRecord};
pub use reference::ReferenceTrajectory;
