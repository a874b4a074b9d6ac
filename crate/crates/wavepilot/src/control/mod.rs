//! The three control laws under comparison: cascaded PD, PD with wave
//! feed-forward, and the preview NMPC.
//!
//! All controllers emit generalized forces inside the actuator box; the
//! mission loop re-asserts that invariant on every applied control.

mod cpd;
mod ff;
mod nmpc;

pub use cpd::{cpd_control, cpd_raw, PdConfig};
pub use ff::{ff_control, FfConfig};
pub use nmpc::{
    solve_nlp, transcribe, ControlSolution, NlpProblem, NmpcConfig, NmpcController, SqpSettings,
    StageDynamics, VehicleStageDynamics, WarmStart,
};

use serde::{Deserialize, Serialize};

/// Which control law drives a mission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControllerKind {
    CascadedPd,
    FeedForward,
    Nmpc,
}

impl ControllerKind {
    pub fn label(&self) -> &'static str {
        match self {
            ControllerKind::CascadedPd => "cpd",
            ControllerKind::FeedForward => "ff",
            ControllerKind::Nmpc => "nmpc",
        }
    }

    pub const ALL: [ControllerKind; 3] = [
        ControllerKind::CascadedPd,
        ControllerKind::FeedForward,
        ControllerKind::Nmpc,
    ];
}
