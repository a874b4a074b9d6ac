//! Closed-loop simulation of an underwater vehicle holding a trajectory in
//! waves.
//!
//! The stack, bottom to top:
//!
//! - [`wave`]: ground-truth irregular sea (spectral synthesis, dispersion,
//!   second-order surface elevation and particle kinematics);
//! - [`vehicle`]: 3-DoF (surge, heave, pitch) rigid-body dynamics with added
//!   mass, nonlinear drag, hydrostatics, wave loading, and RK4 stepping;
//! - [`dswp`]: fixed-point deterministic wave prediction — record elevation
//!   at a measuring point, extract a bounded spectrum, propagate it in space,
//!   emit disturbance previews;
//! - [`estimator`]: extended Kalman filter over the 6-dimensional state;
//! - [`control`]: cascaded PD, PD + wave feed-forward, and a multiple-shooting
//!   predictive controller backed by an in-crate SQP solver;
//! - [`harness`]: mission runner, reference generator, metrics, config and
//!   CSV I/O, and the batch experiment matrix.

pub mod control;
pub mod dswp;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod vehicle;
pub mod wave;

pub use error::Error;
