//! Equations of motion and the fixed-step integrator.

use super::{
    coriolis_matrix, damping_matrix, mass_matrix, restoring_forces, GeneralizedForce,
    VehicleParams, VehicleState,
};
use crate::error::Error;
use nalgebra::{Matrix3, Vector3, Vector6};

/// Rotation J(θ) mapping body velocities onto earth-frame rates:
/// ẋ = u·cosθ + w·sinθ, ż = −u·sinθ + w·cosθ, θ̇ = q.
pub fn rotation_matrix(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

/// η̇ = J(θ)·ν.
pub fn kinematic_transform(theta: f64, nu: &Vector3<f64>) -> Vector3<f64> {
    rotation_matrix(theta) * nu
}

/// Vehicle parameters with the inertia matrix and its inverse precomputed.
#[derive(Debug, Clone)]
pub struct VehicleModel {
    pub params: VehicleParams,
    mass: Matrix3<f64>,
    mass_inv: Matrix3<f64>,
}

impl VehicleModel {
    pub fn new(params: VehicleParams) -> Result<Self, Error> {
        params.validate()?;
        let mass = mass_matrix(&params);
        if mass.cholesky().is_none() {
            return Err(Error::InvalidParameter(
                "inertia matrix is not positive definite".into(),
            ));
        }
        let mass_inv = mass
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("inertia matrix is singular".into()))?;
        Ok(Self { params, mass, mass_inv })
    }

    pub fn mass_matrix(&self) -> &Matrix3<f64> {
        &self.mass
    }

    /// Kinetic energy ½·νᵀMν.
    pub fn kinetic_energy(&self, state: &VehicleState) -> f64 {
        let nu = state.nu_vector();
        0.5 * (nu.transpose() * self.mass * nu)[0]
    }

    /// Continuous-time state derivative: η̇ = J(θ)ν stacked over
    /// ν̇ = M⁻¹(μ + τ_E − C(ν)ν − D(ν)ν − g(η)).
    pub fn dynamics_rhs(
        &self,
        state: &VehicleState,
        control: GeneralizedForce,
        wave: GeneralizedForce,
    ) -> Vector6<f64> {
        let nu = state.nu_vector();
        let eta_dot = kinematic_transform(state.theta(), &nu);
        let coriolis = coriolis_matrix(&self.params, &nu);
        let damping = damping_matrix(&self.params, &nu);
        let restoring = restoring_forces(&self.params, state.theta());
        let net =
            control.as_vector() + wave.as_vector() - coriolis * nu - damping * nu - restoring.as_vector();
        let nu_dot = self.mass_inv * net;
        Vector6::new(
            eta_dot[0], eta_dot[1], eta_dot[2], nu_dot[0], nu_dot[1], nu_dot[2],
        )
    }

    fn rk4_raw(
        &self,
        state: &VehicleState,
        t: f64,
        dt: f64,
        control: &dyn Fn(f64) -> GeneralizedForce,
        disturbance: &dyn Fn(f64, &VehicleState) -> GeneralizedForce,
    ) -> Vector6<f64> {
        let x0 = state.as_vector6();
        let stage = |v: &Vector6<f64>| VehicleState {
            eta: [v[0], v[1], v[2]],
            nu: [v[3], v[4], v[5]],
        };
        let k1 = self.dynamics_rhs(state, control(t), disturbance(t, state));
        let s2 = stage(&(x0 + 0.5 * dt * k1));
        let half = t + 0.5 * dt;
        let k2 = self.dynamics_rhs(&s2, control(half), disturbance(half, &s2));
        let s3 = stage(&(x0 + 0.5 * dt * k2));
        let k3 = self.dynamics_rhs(&s3, control(half), disturbance(half, &s3));
        let s4 = stage(&(x0 + dt * k3));
        let end = t + dt;
        let k4 = self.dynamics_rhs(&s4, control(end), disturbance(end, &s4));
        x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// Classical RK4 step over [t, t+Δt]. The control signal is sampled at
    /// the stage times; the disturbance signal additionally sees the stage
    /// state so state-dependent wave loads integrate consistently. θ is
    /// re-wrapped after the step.
    pub fn rk4_step(
        &self,
        state: &VehicleState,
        t: f64,
        dt: f64,
        control: &dyn Fn(f64) -> GeneralizedForce,
        disturbance: &dyn Fn(f64, &VehicleState) -> GeneralizedForce,
    ) -> Result<VehicleState, Error> {
        debug_assert!(dt > 0.0);
        let next = self.rk4_raw(state, t, dt, control, disturbance);
        let out = VehicleState::from_vector6(&next);
        if !out.is_finite() {
            return Err(Error::NonFiniteState {
                t,
                what: format!("rk4 step from {state:?}"),
            });
        }
        Ok(out)
    }

    /// RK4 with constant control and disturbance over the step (the
    /// zero-order-hold form used by the discrete prediction model).
    pub fn rk4_step_held(
        &self,
        state: &VehicleState,
        dt: f64,
        control: GeneralizedForce,
        wave: GeneralizedForce,
    ) -> Result<VehicleState, Error> {
        self.rk4_step(state, 0.0, dt, &|_| control, &|_, _| wave)
    }

    /// Zero-order-hold RK4 step with θ left continuous (no wrapping on the
    /// way in or out). The optimizer's prediction model uses this so
    /// attitude errors grow monotonically with rotation and stage maps stay
    /// smooth; the rotation matrices are 2π-periodic, so the trajectory
    /// itself is unchanged.
    pub fn rk4_step_held_continuous(
        &self,
        x: &Vector6<f64>,
        dt: f64,
        control: GeneralizedForce,
        wave: GeneralizedForce,
    ) -> Vector6<f64> {
        let state = VehicleState {
            eta: [x[0], x[1], x[2]],
            nu: [x[3], x[4], x[5]],
        };
        self.rk4_raw(&state, 0.0, dt, &|_| control, &|_, _| wave)
    }
}
