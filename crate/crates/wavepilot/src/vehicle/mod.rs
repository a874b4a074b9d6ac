//! 3-DoF (surge, heave, pitch) rigid-body vehicle: inertia with added mass,
//! Coriolis/centripetal coupling, linear-plus-quadratic drag, hydrostatic
//! restoring, wave loading, and fixed-step RK4 integration.
//!
//! Frame convention: earth frame x horizontal, z vertical positive up with
//! z = 0 at the mean free surface; body frame (u, w, q) with the kinematic
//! map ẋ = u·cosθ + w·sinθ, ż = −u·sinθ + w·cosθ, θ̇ = q. Note this keeps
//! the classic marine transform while flipping z up, so the hydrostatic
//! term signs below are fixed by the force-balance requirement that
//! μ = (0, W−B, 0) holds the vehicle still at θ = 0.

mod model;
mod wave_load;

pub use model::{kinematic_transform, rotation_matrix, VehicleModel};
pub use wave_load::{wave_load, wave_load_point};

use crate::error::Error;
use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

/// Wrap an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Generalized force: surge force X (N), heave force Z (N), pitch moment
/// M (N·m).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedForce {
    pub surge: f64,
    pub heave: f64,
    pub pitch: f64,
}

impl GeneralizedForce {
    pub const ZERO: Self = Self {
        surge: 0.0,
        heave: 0.0,
        pitch: 0.0,
    };

    pub fn new(surge: f64, heave: f64, pitch: f64) -> Self {
        Self { surge, heave, pitch }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.surge, self.heave, self.pitch)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn is_finite(&self) -> bool {
        self.surge.is_finite() && self.heave.is_finite() && self.pitch.is_finite()
    }

    pub fn norm_inf(&self) -> f64 {
        self.surge.abs().max(self.heave.abs()).max(self.pitch.abs())
    }
}

impl Add for GeneralizedForce {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.surge + o.surge, self.heave + o.heave, self.pitch + o.pitch)
    }
}

impl Sub for GeneralizedForce {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.surge - o.surge, self.heave - o.heave, self.pitch - o.pitch)
    }
}

impl Neg for GeneralizedForce {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.surge, -self.heave, -self.pitch)
    }
}

impl Mul<f64> for GeneralizedForce {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.surge * s, self.heave * s, self.pitch * s)
    }
}

/// Earth-frame pose η = (x, z, θ) and body-frame velocity ν = (u, w, q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// (x m, z m, θ rad); θ wrapped to (−π, π].
    pub eta: [f64; 3],
    /// (u m/s, w m/s, q rad/s).
    pub nu: [f64; 3],
}

impl VehicleState {
    pub fn new(x: f64, z: f64, theta: f64, u: f64, w: f64, q: f64) -> Self {
        Self {
            eta: [x, z, wrap_angle(theta)],
            nu: [u, w, q],
        }
    }

    pub fn at_rest(x: f64, z: f64, theta: f64) -> Self {
        Self::new(x, z, theta, 0.0, 0.0, 0.0)
    }

    pub fn x(&self) -> f64 {
        self.eta[0]
    }
    pub fn z(&self) -> f64 {
        self.eta[1]
    }
    pub fn theta(&self) -> f64 {
        self.eta[2]
    }
    pub fn u(&self) -> f64 {
        self.nu[0]
    }
    pub fn w(&self) -> f64 {
        self.nu[1]
    }
    pub fn q(&self) -> f64 {
        self.nu[2]
    }

    pub fn eta_vector(&self) -> Vector3<f64> {
        Vector3::from(self.eta)
    }

    pub fn nu_vector(&self) -> Vector3<f64> {
        Vector3::from(self.nu)
    }

    pub fn as_vector6(&self) -> Vector6<f64> {
        Vector6::new(
            self.eta[0], self.eta[1], self.eta[2], self.nu[0], self.nu[1], self.nu[2],
        )
    }

    /// Rebuild from a stacked vector, wrapping θ.
    pub fn from_vector6(v: &Vector6<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn is_finite(&self) -> bool {
        self.eta.iter().chain(self.nu.iter()).all(|v| v.is_finite())
    }
}

/// Symmetric box bounds on the applied generalized force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorLimits {
    pub surge: f64,
    pub heave: f64,
    pub pitch: f64,
}

impl ActuatorLimits {
    pub fn clamp(&self, f: GeneralizedForce) -> GeneralizedForce {
        GeneralizedForce::new(
            f.surge.clamp(-self.surge, self.surge),
            f.heave.clamp(-self.heave, self.heave),
            f.pitch.clamp(-self.pitch, self.pitch),
        )
    }

    pub fn contains(&self, f: GeneralizedForce, tol: f64) -> bool {
        f.surge.abs() <= self.surge + tol
            && f.heave.abs() <= self.heave + tol
            && f.pitch.abs() <= self.pitch + tol
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.surge, self.heave, self.pitch)
    }
}

/// Hydrodynamic and inertial description of the vehicle (defaults match the
/// BlueROV2 Heavy set used throughout).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    /// Weight W (N).
    pub weight: f64,
    /// Buoyancy B (N).
    pub buoyancy: f64,
    /// Rigid-body pitch inertia I_y (kg·m²).
    pub pitch_inertia: f64,
    /// Surge added mass (kg).
    pub added_mass_surge: f64,
    /// Heave added mass (kg).
    pub added_mass_heave: f64,
    /// Pitch added inertia (kg·m²).
    pub added_inertia_pitch: f64,
    /// Surge–pitch added-mass cross term (kg·m).
    pub added_cross_surge_pitch: f64,
    /// Pitch–surge added-mass cross term (kg·m).
    pub added_cross_pitch_surge: f64,
    /// Linear drag, surge (kg/s).
    pub linear_drag_surge: f64,
    /// Linear drag, heave (kg/s).
    pub linear_drag_heave: f64,
    /// Linear drag, pitch (kg·m²/s).
    pub linear_drag_pitch: f64,
    /// Quadratic drag, surge (N·s²/m²).
    pub quad_drag_surge: f64,
    /// Quadratic drag, heave (N·s²/m²).
    pub quad_drag_heave: f64,
    /// Quadratic drag, pitch (N·m·s²).
    pub quad_drag_pitch: f64,
    /// Centre-of-buoyancy offset from the centre of gravity, body frame (m).
    pub cob_offset: [f64; 3],
    /// Maximum thrust of a single thruster (N).
    pub max_thrust: f64,
    /// Thruster angle offset from the body axes (rad).
    pub thruster_offset: f64,
    /// Body length L (m), used by the wave-moment strip integral.
    pub body_length: f64,
    /// Moment arm for the pitch actuation bound (m).
    pub pitch_moment_arm: f64,
    /// Strips for the wave pitch-moment integral (midpoint rule).
    pub strip_count: usize,
    /// Gravitational acceleration (m/s²); mass is recovered as W/g.
    pub gravity: f64,
    /// Wave drag on relative velocity (ν_p − ν) instead of raw ν_p.
    pub relative_drag: bool,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            weight: 112.8,
            buoyancy: 114.8,
            pitch_inertia: 0.253,
            added_mass_surge: 6.36,
            added_mass_heave: 18.68,
            added_inertia_pitch: 0.135,
            added_cross_surge_pitch: 0.67,
            added_cross_pitch_surge: 0.67,
            linear_drag_surge: 13.7,
            linear_drag_heave: 33.0,
            linear_drag_pitch: 0.80,
            quad_drag_surge: 141.0,
            quad_drag_heave: 190.0,
            quad_drag_pitch: 0.47,
            cob_offset: [0.0, 0.0, 0.028],
            max_thrust: 35.0,
            thruster_offset: PI / 4.0,
            body_length: 0.457,
            pitch_moment_arm: 0.32,
            strip_count: 10,
            gravity: 9.81,
            relative_drag: false,
        }
    }
}

impl VehicleParams {
    /// Dry mass m = W/g (kg).
    pub fn mass(&self) -> f64 {
        self.weight / self.gravity
    }

    pub fn validate(&self) -> Result<(), Error> {
        let nonneg = [
            ("weight", self.weight),
            ("buoyancy", self.buoyancy),
            ("pitch_inertia", self.pitch_inertia),
            ("added_mass_surge", self.added_mass_surge),
            ("added_mass_heave", self.added_mass_heave),
            ("added_inertia_pitch", self.added_inertia_pitch),
            ("linear_drag_surge", self.linear_drag_surge),
            ("linear_drag_heave", self.linear_drag_heave),
            ("linear_drag_pitch", self.linear_drag_pitch),
            ("quad_drag_surge", self.quad_drag_surge),
            ("quad_drag_heave", self.quad_drag_heave),
            ("quad_drag_pitch", self.quad_drag_pitch),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.max_thrust > 0.0) {
            return Err(Error::InvalidParameter("max_thrust must be > 0".into()));
        }
        if !(self.body_length > 0.0) {
            return Err(Error::InvalidParameter("body_length must be > 0".into()));
        }
        if !(self.gravity > 0.0) {
            return Err(Error::InvalidParameter("gravity must be > 0".into()));
        }
        if self.strip_count == 0 {
            return Err(Error::InvalidParameter("strip_count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Box bounds on the applied generalized force from the thruster layout:
/// four vectored thrusters contribute 4·T·cos α in surge and heave, two
/// vertical pairs give 2·T·ℓ in pitch.
pub fn actuator_limits(p: &VehicleParams) -> ActuatorLimits {
    let planar = 4.0 * p.max_thrust * p.thruster_offset.cos();
    ActuatorLimits {
        surge: planar,
        heave: planar,
        pitch: 2.0 * p.max_thrust * p.pitch_moment_arm,
    }
}

/// Inertia matrix M = M_RB + M_A, symmetrized.
pub fn mass_matrix(p: &VehicleParams) -> Matrix3<f64> {
    let m = p.mass();
    let raw = Matrix3::new(
        m + p.added_mass_surge,
        0.0,
        p.added_cross_surge_pitch,
        0.0,
        m + p.added_mass_heave,
        0.0,
        p.added_cross_pitch_surge,
        0.0,
        p.pitch_inertia + p.added_inertia_pitch,
    );
    0.5 * (raw + raw.transpose())
}

/// Coriolis/centripetal matrix in the standard skew form built from the
/// momentum components (P_x, P_z) = first two rows of M·ν.
pub fn coriolis_matrix(p: &VehicleParams, nu: &Vector3<f64>) -> Matrix3<f64> {
    let momentum = mass_matrix(p) * nu;
    let px = momentum[0];
    let pz = momentum[1];
    Matrix3::new(0.0, 0.0, -pz, 0.0, 0.0, px, pz, -px, 0.0)
}

/// Damping matrix D(ν) = diag of linear + quadratic terms per axis.
pub fn damping_matrix(p: &VehicleParams, nu: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(
        p.linear_drag_surge + p.quad_drag_surge * nu[0].abs(),
        p.linear_drag_heave + p.quad_drag_heave * nu[1].abs(),
        p.linear_drag_pitch + p.quad_drag_pitch * nu[2].abs(),
    ))
}

/// Hydrostatic restoring vector g(η), entering the dynamics as
/// ν̇ = M⁻¹(μ + τ_E − Cν − Dν − g).
///
/// With z up, net buoyant excess B − W pushes the vehicle up, so at θ = 0
/// the heave entry is W − B and the hover force that cancels it is
/// μ = (0, W − B, 0). The pitch entry z_B·B·sinθ opposes pitch displacement
/// for a centre of buoyancy above the centre of gravity.
pub fn restoring_forces(p: &VehicleParams, theta: f64) -> GeneralizedForce {
    let net = p.buoyancy - p.weight;
    let (s, c) = theta.sin_cos();
    GeneralizedForce::new(net * s, -net * c, p.cob_offset[2] * p.buoyancy * s)
}
