//! Extended Kalman filter over the 6-dimensional vehicle state.
//!
//! Prediction propagates the estimate through the same RK4 discrete map as
//! the plant, with the predicted wave load as a known input; the state
//! Jacobian comes from central finite differences of that map. Updates use
//! a pose-only linear measurement, an angle-wrapped innovation, and the
//! Joseph covariance form. The filter is owned by the simulation loop;
//! published estimates are immutable snapshots.

use crate::error::Error;
use crate::vehicle::{wrap_angle, GeneralizedForce, VehicleModel, VehicleState};
use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

type Matrix3x6 = SMatrix<f64, 3, 6>;
type Matrix6x3 = SMatrix<f64, 6, 3>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EkfConfig {
    /// Process noise diagonal, (x, z, θ, u, w, q).
    pub process_noise: [f64; 6],
    /// Measurement noise diagonal, (x, z, θ).
    pub measurement_noise: [f64; 3],
    /// Initial covariance diagonal.
    pub initial_covariance: [f64; 6],
    /// Base perturbation for the finite-difference Jacobian, scaled
    /// per component by max(1, |x_i|).
    pub jacobian_step: f64,
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            process_noise: [1e-8, 1e-8, 1e-8, 2e-5, 2e-5, 2e-5],
            measurement_noise: [1e-4, 1e-4, 2.5e-5],
            initial_covariance: [1e-4, 1e-4, 1e-4, 1e-3, 1e-3, 1e-3],
            jacobian_step: 1e-6,
        }
    }
}

impl EkfConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.jacobian_step > 0.0) {
            return Err(Error::InvalidParameter("jacobian_step must be > 0".into()));
        }
        for v in self.process_noise.iter().chain(self.initial_covariance.iter()) {
            if !(*v >= 0.0) {
                return Err(Error::InvalidParameter(
                    "covariance diagonals must be >= 0".into(),
                ));
            }
        }
        for v in &self.measurement_noise {
            if !(*v > 0.0) {
                return Err(Error::InvalidParameter(
                    "measurement noise must be > 0".into(),
                ));
            }
        }
        Ok(())
    }

    fn q(&self) -> Matrix6<f64> {
        Matrix6::from_diagonal(&Vector6::from(self.process_noise))
    }

    fn r(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.measurement_noise))
    }
}

/// Filter state: estimate and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfState {
    pub estimate: VehicleState,
    pub covariance: Matrix6<f64>,
}

#[derive(Debug, Clone)]
pub struct Ekf {
    pub cfg: EkfConfig,
    pub state: EkfState,
}

fn symmetrize(m: &Matrix6<f64>) -> Matrix6<f64> {
    0.5 * (m + m.transpose())
}

/// Component-wise difference with the pitch entry wrapped.
fn state_difference(a: &Vector6<f64>, b: &Vector6<f64>) -> Vector6<f64> {
    let mut d = a - b;
    d[2] = wrap_angle(d[2]);
    d
}

impl Ekf {
    pub fn new(cfg: EkfConfig, initial: VehicleState) -> Result<Self, Error> {
        cfg.validate()?;
        let covariance = Matrix6::from_diagonal(&Vector6::from(cfg.initial_covariance));
        Ok(Self {
            cfg,
            state: EkfState {
                estimate: initial,
                covariance,
            },
        })
    }

    /// Discrete-map Jacobian ∂F/∂x at `state` by central differences.
    pub fn step_jacobian(
        &self,
        model: &VehicleModel,
        state: &VehicleState,
        control: GeneralizedForce,
        disturbance: &dyn Fn(f64, &VehicleState) -> GeneralizedForce,
        t: f64,
        dt: f64,
    ) -> Result<Matrix6<f64>, Error> {
        let x0 = state.as_vector6();
        let mut jac = Matrix6::zeros();
        for i in 0..6 {
            let h = self.cfg.jacobian_step * x0[i].abs().max(1.0);
            let mut plus = x0;
            plus[i] += h;
            let mut minus = x0;
            minus[i] -= h;
            let fp = model
                .rk4_step(&VehicleState::from_vector6(&plus), t, dt, &|_| control, disturbance)?
                .as_vector6();
            let fm = model
                .rk4_step(&VehicleState::from_vector6(&minus), t, dt, &|_| control, disturbance)?
                .as_vector6();
            let col = state_difference(&fp, &fm) / (2.0 * h);
            jac.set_column(i, &col);
        }
        Ok(jac)
    }

    /// Propagate estimate and covariance over one control interval through
    /// an arbitrary disturbance signal (the validation path feeds the true
    /// wave loads here).
    pub fn predict_with(
        &mut self,
        model: &VehicleModel,
        control: GeneralizedForce,
        disturbance: &dyn Fn(f64, &VehicleState) -> GeneralizedForce,
        t: f64,
        dt: f64,
    ) -> Result<(), Error> {
        let jac = self.step_jacobian(model, &self.state.estimate, control, disturbance, t, dt)?;
        let next = model
            .rk4_step(&self.state.estimate, t, dt, &|_| control, disturbance)
            .map_err(|e| Error::EstimatorFault(format!("prediction diverged: {e}")))?;
        if !next.is_finite() {
            return Err(Error::EstimatorFault(format!(
                "non-finite prediction from {:?}",
                self.state.estimate
            )));
        }
        self.state.estimate = next;
        self.state.covariance = symmetrize(&(jac * self.state.covariance * jac.transpose()))
            + self.cfg.q();
        Ok(())
    }

    /// Propagate with the applied control and the predicted wave load held
    /// constant over the step.
    pub fn predict(
        &mut self,
        model: &VehicleModel,
        control: GeneralizedForce,
        predicted_wave: GeneralizedForce,
        dt: f64,
    ) -> Result<(), Error> {
        self.predict_with(model, control, &move |_, _| predicted_wave, 0.0, dt)
    }

    /// Fuse a pose measurement y = (x, z, θ). Joseph-form covariance update;
    /// the θ innovation is wrapped to (−π, π].
    pub fn update(&mut self, measurement: &Vector3<f64>) -> Result<(), Error> {
        let mut h = Matrix3x6::zeros();
        h.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&Matrix3::identity());

        let x = self.state.estimate.as_vector6();
        let predicted = Vector3::new(x[0], x[1], x[2]);
        let mut innovation = measurement - predicted;
        innovation[2] = wrap_angle(innovation[2]);

        let r = self.cfg.r();
        let p = self.state.covariance;
        let s = h * p * h.transpose() + r;
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| Error::EstimatorFault("innovation covariance singular".into()))?;
        let gain: Matrix6x3 = p * h.transpose() * s_inv;

        let mut new_x = x + gain * innovation;
        new_x[2] = wrap_angle(new_x[2]);
        self.state.estimate = VehicleState::from_vector6(&new_x);

        let i_kh = Matrix6::identity() - gain * h;
        let joseph = i_kh * p * i_kh.transpose() + gain * r * gain.transpose();
        self.state.covariance = symmetrize(&joseph);
        Ok(())
    }

    /// Smallest eigenvalue of the covariance (health diagnostic).
    pub fn covariance_min_eigenvalue(&self) -> f64 {
        self.state
            .covariance
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }
}
