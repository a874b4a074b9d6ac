//! Cascaded position–velocity PD control: the outer loop turns pose error
//! into a commanded body velocity, the inner loop turns velocity error into
//! a generalized force.

use crate::vehicle::{rotation_matrix, wrap_angle, ActuatorLimits, GeneralizedForce, VehicleState};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdConfig {
    /// Outer proportional gains on pose error.
    pub k_p: [f64; 3],
    /// Outer derivative gains on pose-error rate.
    pub k_d: [f64; 3],
    /// Inner velocity-loop gains.
    pub k_pv: [f64; 3],
}

impl Default for PdConfig {
    fn default() -> Self {
        Self {
            k_p: [3.0, 3.0, 3.0],
            k_d: [1.0, 1.0, 1.0],
            k_pv: [40.0, 40.0, 8.0],
        }
    }
}

/// Unclamped cascade: ν_c = Jᵀ(θ̂)·(K_p·e + K_d·ė), μ = K_pv·(ν_c − ν̂).
pub fn cpd_raw(
    x_hat: &VehicleState,
    eta_ref: &Vector3<f64>,
    eta_ref_dot: &Vector3<f64>,
    cfg: &PdConfig,
) -> GeneralizedForce {
    let rot = rotation_matrix(x_hat.theta());
    let mut pose_error = eta_ref - x_hat.eta_vector();
    pose_error[2] = wrap_angle(pose_error[2]);
    let error_rate = eta_ref_dot - rot * x_hat.nu_vector();

    let outer = Vector3::new(
        cfg.k_p[0] * pose_error[0] + cfg.k_d[0] * error_rate[0],
        cfg.k_p[1] * pose_error[1] + cfg.k_d[1] * error_rate[1],
        cfg.k_p[2] * pose_error[2] + cfg.k_d[2] * error_rate[2],
    );
    let nu_commanded = rot.transpose() * outer;
    let nu_error = nu_commanded - x_hat.nu_vector();
    GeneralizedForce::new(
        cfg.k_pv[0] * nu_error[0],
        cfg.k_pv[1] * nu_error[1],
        cfg.k_pv[2] * nu_error[2],
    )
}

/// Cascaded PD control, clamped to the actuator box.
pub fn cpd_control(
    x_hat: &VehicleState,
    eta_ref: &Vector3<f64>,
    eta_ref_dot: &Vector3<f64>,
    cfg: &PdConfig,
    limits: &ActuatorLimits,
) -> GeneralizedForce {
    limits.clamp(cpd_raw(x_hat, eta_ref, eta_ref_dot, cfg))
}
