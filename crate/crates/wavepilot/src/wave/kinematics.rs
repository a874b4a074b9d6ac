//! Surface elevation and particle kinematics for a [`SeaState`].
//!
//! The hyperbolic depth profiles are evaluated as exponential ratios so that
//! large κd (deep water) cannot overflow: with a = κ(z+d), b = κd and
//! 0 ≤ a ≤ b every exponent is non-positive.

use super::SeaState;
use crate::error::Error;

/// Fluid particle velocity and acceleration at one point, earth frame.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ParticleKinematics {
    pub u: f64,
    pub w: f64,
    pub du: f64,
    pub dw: f64,
}

/// cosh(a)/cosh(b) for 0 ≤ a ≤ b.
fn cosh_over_cosh(a: f64, b: f64) -> f64 {
    (a - b).exp() * (1.0 + (-2.0 * a).exp()) / (1.0 + (-2.0 * b).exp())
}

/// sinh(a)/cosh(b) for 0 ≤ a ≤ b. Exactly zero at a = 0.
fn sinh_over_cosh(a: f64, b: f64) -> f64 {
    (a - b).exp() * (1.0 - (-2.0 * a).exp()) / (1.0 + (-2.0 * b).exp())
}

/// cosh(2a)/sinh⁴(b) for 0 ≤ a ≤ b, b > 0.
fn cosh2_over_sinh4(a: f64, b: f64) -> f64 {
    let denom = 1.0 - (-2.0 * b).exp();
    8.0 * (2.0 * a - 4.0 * b).exp() * (1.0 + (-4.0 * a).exp()) / (denom * denom * denom * denom)
}

/// sinh(2a)/sinh⁴(b) for 0 ≤ a ≤ b, b > 0. Exactly zero at a = 0.
fn sinh2_over_sinh4(a: f64, b: f64) -> f64 {
    let denom = 1.0 - (-2.0 * b).exp();
    8.0 * (2.0 * a - 4.0 * b).exp() * (1.0 - (-4.0 * a).exp()) / (denom * denom * denom * denom)
}

pub fn elevation(sea: &SeaState, x: f64, t: f64) -> f64 {
    let mut zeta = 0.0;
    for c in &sea.components {
        let a = c.amplitude();
        let theta = c.wavenumber * x - c.angular_frequency * t + c.phase;
        zeta += a * theta.cos();
        if sea.second_order {
            zeta += 0.5 * c.wavenumber * a * a * (2.0 * theta).cos();
        }
    }
    zeta
}

fn check_depth(sea: &SeaState, z: f64) -> Result<(), Error> {
    if z < -sea.depth || z > 0.0 {
        return Err(Error::OutOfDomain(format!(
            "z = {z} outside water column [-{}, 0]",
            sea.depth
        )));
    }
    Ok(())
}

pub fn particle_velocity(sea: &SeaState, x: f64, z: f64, t: f64) -> Result<(f64, f64), Error> {
    check_depth(sea, z)?;
    let mut u = 0.0;
    let mut w = 0.0;
    for c in &sea.components {
        let kappa = c.wavenumber;
        let a_arg = kappa * (z + sea.depth);
        let b_arg = kappa * sea.depth;
        let theta = kappa * x - c.angular_frequency * t + c.phase;
        let cel = c.celerity();
        let first = sea.gravity * c.height / (2.0 * cel);
        u += first * cosh_over_cosh(a_arg, b_arg) * theta.cos();
        w += first * sinh_over_cosh(a_arg, b_arg) * theta.sin();
        if sea.second_order {
            let second = (3.0 / 16.0) * cel * kappa * kappa * c.height * c.height;
            u += second * cosh2_over_sinh4(a_arg, b_arg) * (2.0 * theta).cos();
            w += second * sinh2_over_sinh4(a_arg, b_arg) * (2.0 * theta).sin();
        }
    }
    Ok((u, w))
}

/// Analytic ∂/∂t of [`particle_velocity`]: each cos↔sin swap picks up a
/// factor ω (first order) or 2ω (second order).
pub fn particle_acceleration(sea: &SeaState, x: f64, z: f64, t: f64) -> Result<(f64, f64), Error> {
    check_depth(sea, z)?;
    let mut du = 0.0;
    let mut dw = 0.0;
    for c in &sea.components {
        let kappa = c.wavenumber;
        let omega = c.angular_frequency;
        let a_arg = kappa * (z + sea.depth);
        let b_arg = kappa * sea.depth;
        let theta = kappa * x - omega * t + c.phase;
        let cel = c.celerity();
        let first = sea.gravity * c.height / (2.0 * cel);
        du += first * omega * cosh_over_cosh(a_arg, b_arg) * theta.sin();
        dw += -first * omega * sinh_over_cosh(a_arg, b_arg) * theta.cos();
        if sea.second_order {
            let second = (3.0 / 16.0) * cel * kappa * kappa * c.height * c.height;
            du += second * 2.0 * omega * cosh2_over_sinh4(a_arg, b_arg) * (2.0 * theta).sin();
            dw += -second * 2.0 * omega * sinh2_over_sinh4(a_arg, b_arg) * (2.0 * theta).cos();
        }
    }
    Ok((du, dw))
}

pub fn particle_kinematics(
    sea: &SeaState,
    x: f64,
    z: f64,
    t: f64,
) -> Result<ParticleKinematics, Error> {
    let (u, w) = particle_velocity(sea, x, z, t)?;
    let (du, dw) = particle_acceleration(sea, x, z, t)?;
    Ok(ParticleKinematics { u, w, du, dw })
}
