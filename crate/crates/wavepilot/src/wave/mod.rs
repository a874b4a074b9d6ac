//! Ground-truth sea state: monochromatic components assembled by linear
//! superposition, with second-order corrections to the surface elevation and
//! particle kinematics.
//!
//! All operations are pure functions of immutable inputs and safe to call
//! concurrently.

mod kinematics;
mod spectrum;

pub use kinematics::ParticleKinematics;
pub use spectrum::{synthesize_sea, SpectrumShape, SpectrumSpec};

use crate::error::Error;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Residual tolerance enforced on ω² = gκ·tanh(κd) for exact-dispersion
/// components.
pub const DISPERSION_TOL: f64 = 1e-9;

/// Wrap an angle to [0, 2π).
pub fn wrap_two_pi(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w == 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// One monochromatic wave component.
///
/// `deep_water` marks components constructed with the κ = ω²/g shortcut
/// instead of the finite-depth dispersion relation; those are exempt from the
/// dispersion-residual check when embedded in a [`SeaState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveComponent {
    /// Wave height H (m), crest to trough.
    pub height: f64,
    /// Angular frequency ω (rad/s).
    pub angular_frequency: f64,
    /// Wavenumber κ (rad/m).
    pub wavenumber: f64,
    /// Phase offset ε (rad), in [0, 2π).
    pub phase: f64,
    /// True when κ was set to ω²/g rather than solved at the site depth.
    #[serde(default)]
    pub deep_water: bool,
}

impl WaveComponent {
    /// Build a component whose wavenumber satisfies the dispersion relation
    /// at depth `d`.
    pub fn with_dispersion(
        height: f64,
        angular_frequency: f64,
        phase: f64,
        depth: f64,
        gravity: f64,
    ) -> Result<Self, Error> {
        let wavenumber = solve_dispersion(angular_frequency, depth, gravity)?;
        Self::checked(height, angular_frequency, wavenumber, phase, false)
    }

    /// Build a component with the deep-water wavenumber κ = ω²/g.
    pub fn deep_water(
        height: f64,
        angular_frequency: f64,
        phase: f64,
        gravity: f64,
    ) -> Result<Self, Error> {
        let wavenumber = angular_frequency * angular_frequency / gravity;
        Self::checked(height, angular_frequency, wavenumber, phase, true)
    }

    fn checked(
        height: f64,
        angular_frequency: f64,
        wavenumber: f64,
        phase: f64,
        deep_water: bool,
    ) -> Result<Self, Error> {
        if !(height >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "wave height must be >= 0, got {height}"
            )));
        }
        if !(angular_frequency > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "angular frequency must be > 0, got {angular_frequency}"
            )));
        }
        if !(wavenumber > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "wavenumber must be > 0, got {wavenumber}"
            )));
        }
        Ok(Self {
            height,
            angular_frequency,
            wavenumber,
            phase: wrap_two_pi(phase),
            deep_water,
        })
    }

    /// Phase speed c = ω/κ.
    pub fn celerity(&self) -> f64 {
        self.angular_frequency / self.wavenumber
    }

    /// Amplitude H/2.
    pub fn amplitude(&self) -> f64 {
        0.5 * self.height
    }
}

/// A sea state: component list plus the water column it lives in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeaState {
    pub components: Vec<WaveComponent>,
    /// Water depth d (m), seabed at z = -d.
    pub depth: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    /// Evaluate the second-order correction terms (on by default).
    pub second_order: bool,
}

impl SeaState {
    /// Validates depth and, for non-deep-water components, the dispersion
    /// residual at this depth.
    pub fn new(components: Vec<WaveComponent>, depth: f64, gravity: f64) -> Result<Self, Error> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "sea state needs at least one component".into(),
            ));
        }
        if !(depth > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "water depth must be > 0, got {depth}"
            )));
        }
        for c in &components {
            if !c.deep_water {
                let residual = dispersion_residual(c.angular_frequency, c.wavenumber, depth, gravity);
                if residual >= DISPERSION_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "component at omega = {} violates dispersion at depth {} (residual {:e})",
                        c.angular_frequency, depth, residual
                    )));
                }
            }
        }
        Ok(Self {
            components,
            depth,
            gravity,
            second_order: true,
        })
    }

    /// Same sea with second-order terms disabled (linear superposition only).
    pub fn linear(mut self) -> Self {
        self.second_order = false;
        self
    }

    /// Significant wave height recovered from the component amplitudes,
    /// Hs = 4·√m₀ with m₀ = Σ (Hᵢ/2)²/2.
    pub fn significant_wave_height(&self) -> f64 {
        let m0: f64 = self
            .components
            .iter()
            .map(|c| {
                let a = c.amplitude();
                0.5 * a * a
            })
            .sum();
        4.0 * m0.sqrt()
    }

    /// Surface elevation ζ(x, t).
    pub fn elevation(&self, x: f64, t: f64) -> f64 {
        kinematics::elevation(self, x, t)
    }

    /// Particle velocity (u_p, w_p) at (x, z, t); z ∈ [-d, 0].
    pub fn particle_velocity(&self, x: f64, z: f64, t: f64) -> Result<(f64, f64), Error> {
        kinematics::particle_velocity(self, x, z, t)
    }

    /// Particle acceleration (∂u_p/∂t, ∂w_p/∂t) at (x, z, t); z ∈ [-d, 0].
    pub fn particle_acceleration(&self, x: f64, z: f64, t: f64) -> Result<(f64, f64), Error> {
        kinematics::particle_acceleration(self, x, z, t)
    }

    /// Velocity and acceleration in one evaluation.
    pub fn particle_kinematics(&self, x: f64, z: f64, t: f64) -> Result<ParticleKinematics, Error> {
        kinematics::particle_kinematics(self, x, z, t)
    }
}

/// |ω² − gκ·tanh(κd)|.
pub fn dispersion_residual(omega: f64, kappa: f64, depth: f64, gravity: f64) -> f64 {
    (omega * omega - gravity * kappa * (kappa * depth).tanh()).abs()
}

/// Solve ω² = gκ·tanh(κd) for κ.
///
/// Newton iteration seeded with the deep-water guess κ₀ = ω²/g; falls back to
/// bisection on a bracketed interval if Newton stalls. Deterministic: the
/// same inputs always take the same iteration path.
pub fn solve_dispersion(omega: f64, depth: f64, gravity: f64) -> Result<f64, Error> {
    if !(omega > 0.0) || !(depth > 0.0) || !(gravity > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "solve_dispersion requires omega, depth, gravity > 0 (got {omega}, {depth}, {gravity})"
        )));
    }
    let w2 = omega * omega;
    let f = |k: f64| w2 - gravity * k * (k * depth).tanh();
    let fprime = |k: f64| {
        let kd = k * depth;
        let t = kd.tanh();
        let sech2 = 1.0 - t * t;
        -gravity * (t + kd * sech2)
    };

    // Newton from the deep-water guess.
    let mut k = w2 / gravity;
    for _ in 0..60 {
        let r = f(k);
        if r.abs() < 1e-13 * w2.max(1.0) {
            return Ok(k);
        }
        let d = fprime(k);
        if d == 0.0 {
            break;
        }
        let next = k - r / d;
        if !next.is_finite() || next <= 0.0 {
            break;
        }
        if (next - k).abs() <= 1e-16 * k {
            k = next;
            break;
        }
        k = next;
    }
    if f(k).abs() < DISPERSION_TOL {
        return Ok(k);
    }

    // Bisection fallback: f is strictly decreasing with f(0⁺) = ω² > 0.
    let mut lo = 1e-12;
    let mut hi = (w2 / gravity).max(1.0 / depth);
    let mut grow = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 120 {
            return Err(Error::DispersionDiverged {
                omega,
                depth,
                residual: f(hi).abs(),
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= f64::EPSILON * hi {
            break;
        }
    }
    k = 0.5 * (lo + hi);
    let residual = f(k).abs();
    if residual < DISPERSION_TOL {
        Ok(k)
    } else {
        Err(Error::DispersionDiverged { omega, depth, residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dispersion_deep_water_limit() {
        // tanh(κd) → 1, so κ → ω²/g.
        let k = solve_dispersion(1.0, 1e6, 9.81).unwrap();
        assert_relative_eq!(k, 1.0 / 9.81, max_relative = 1e-6);
    }

    #[test]
    fn dispersion_shallow_limit() {
        // κd ≪ 1 gives κ → ω/√(gd).
        let k = solve_dispersion(0.1, 1.0, 9.81).unwrap();
        assert_relative_eq!(k, 0.031928, max_relative = 1e-3);
    }

    #[test]
    fn dispersion_residual_sweep() {
        for &d in &[5.0, 54.0, 500.0] {
            let mut w = 0.1;
            while w <= 5.0 {
                let k = solve_dispersion(w, d, 9.81).unwrap();
                assert!(k > 0.0);
                let r = dispersion_residual(w, k, d, 9.81);
                assert!(r < DISPERSION_TOL, "residual {r} at omega {w}, depth {d}");
                w += 0.05;
            }
        }
    }

    #[test]
    fn dispersion_deterministic() {
        let a = solve_dispersion(2.0 * PI / 9.5, 54.0, 9.81).unwrap();
        let b = solve_dispersion(2.0 * PI / 9.5, 54.0, 9.81).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn celerity_is_omega_over_kappa() {
        let c = WaveComponent::checked(1.0, 1.0, 0.5, 0.0, true).unwrap();
        assert_eq!(c.celerity(), 2.0);
    }

    #[test]
    fn celerity_deep_water_is_g_over_omega() {
        let g = 9.81;
        let c = WaveComponent::deep_water(1.0, 0.8, 0.0, g).unwrap();
        assert_relative_eq!(c.celerity(), g / 0.8, max_relative = 1e-6);
    }

    #[test]
    fn celerity_lower_frequency_travels_faster() {
        let g = 9.81;
        let slow = WaveComponent::deep_water(1.0, 2.0, 0.0, g).unwrap();
        let fast = WaveComponent::deep_water(1.0, 0.5, 0.0, g).unwrap();
        assert!(fast.celerity() > slow.celerity());
    }

    #[test]
    fn sea_state_rejects_bad_dispersion() {
        let c = WaveComponent::checked(1.0, 1.0, 0.3, 0.0, false).unwrap();
        assert!(SeaState::new(vec![c], 54.0, 9.81).is_err());
    }

    #[test]
    fn sea_state_accepts_deep_water_flagged() {
        let c = WaveComponent::deep_water(1.0, 1.0, 0.0, 9.81).unwrap();
        // κ = ω²/g fails finite-depth dispersion at shallow depth, but the
        // flag exempts it.
        assert!(SeaState::new(vec![c], 5.0, 9.81).is_ok());
    }

    #[test]
    fn phase_wraps_into_range() {
        let c = WaveComponent::checked(1.0, 1.0, 0.1, -0.5, true).unwrap();
        assert!(c.phase >= 0.0 && c.phase < 2.0 * PI);
        assert_relative_eq!(c.phase, 2.0 * PI - 0.5, epsilon = 1e-12);
    }
}
