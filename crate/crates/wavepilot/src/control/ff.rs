//! PD plus wave feed-forward: the predicted generalized wave load for the
//! current step is applied with opposite sign on top of the cascade.

use super::cpd::{cpd_raw, PdConfig};
use crate::vehicle::{ActuatorLimits, GeneralizedForce, VehicleState};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FfConfig {
    /// Scale the compensation by the inverse actuator bounds (the
    /// normalized-control reading of the feed-forward law). Off by default:
    /// compensation in plain force units.
    pub normalized: bool,
}

impl Default for FfConfig {
    fn default() -> Self {
        Self { normalized: false }
    }
}

/// Feed-forward control. `predicted_load` is the disturbance preview entry
/// for the current step; when it is missing the controller degrades to the
/// plain cascade and reports that through the second return value.
pub fn ff_control(
    x_hat: &VehicleState,
    eta_ref: &Vector3<f64>,
    eta_ref_dot: &Vector3<f64>,
    predicted_load: Option<GeneralizedForce>,
    pd_cfg: &PdConfig,
    ff_cfg: &FfConfig,
    limits: &ActuatorLimits,
) -> (GeneralizedForce, bool) {
    let pd = cpd_raw(x_hat, eta_ref, eta_ref_dot, pd_cfg);
    match predicted_load {
        Some(load) => {
            let mut compensation = -load;
            if ff_cfg.normalized {
                compensation = GeneralizedForce::new(
                    compensation.surge / limits.surge,
                    compensation.heave / limits.heave,
                    compensation.pitch / limits.pitch,
                );
            }
            (limits.clamp(pd + compensation), false)
        }
        None => (limits.clamp(pd), true),
    }
}
