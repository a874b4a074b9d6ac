//! Closed-loop mission execution.
//!
//! Phase 1 (0..T_M): the vehicle station-keeps under cascaded PD while the
//! elevation record accumulates. Phase 2 (T_M..end): each step samples the
//! sensors, updates the estimator, refreshes the wave predictor, runs the
//! selected controller, and propagates the truth plant through the true
//! wave loads. Runtime faults abort the mission but always return the
//! partial log.

use super::config::{ScenarioConfig, SeaSource};
use super::reference::ReferenceTrajectory;
use crate::control::{
    cpd_control, ff_control, ControlSolution, ControllerKind, NmpcController,
};
use crate::dswp::{DisturbancePreview, WavePredictor};
use crate::error::Error;
use crate::estimator::Ekf;
use crate::vehicle::{
    actuator_limits, wave_load, GeneralizedForce, VehicleModel, VehicleState,
};
use crate::wave::SeaState;
use nalgebra::{Vector3, Vector6};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub phase: u8,
    pub truth: VehicleState,
    pub estimate: VehicleState,
    pub reference: Vector6<f64>,
    pub applied: GeneralizedForce,
    pub true_load: GeneralizedForce,
    pub predicted_load: GeneralizedForce,
    /// Ground-frame mechanical proxy Σ|μ_i·ν_i|.
    pub power_mech: f64,
    /// Propulsive mechanical power Σ|μ_i·(ν_i − ν_p,i)|: work rate against
    /// the surrounding water.
    pub power_prop: f64,
    /// Thrust-magnitude electrical proxy k_t·Σ|μ_i|^{3/2}.
    pub power_elec: f64,
    pub covariance_diag: [f64; 6],
    pub covariance_min_eig: f64,
    pub solver_iterations: u32,
    pub solver_kkt: f64,
    /// Wall-clock solve time; kept in memory for aggregate reporting, never
    /// written to the CSV artifacts (those must be bit-reproducible).
    pub solve_time_s: f64,
    pub preview_len: u32,
}

#[derive(Debug, Clone)]
pub struct MissionLog {
    pub rows: Vec<LogRow>,
    pub dt: f64,
    pub record_duration: f64,
    pub case_label: String,
    pub controller: ControllerKind,
}

impl MissionLog {
    pub fn phase2_rows(&self) -> impl Iterator<Item = &LogRow> {
        self.rows.iter().filter(|r| r.phase == 2)
    }
}

/// One predictive-controller solve, kept for external re-simulation when
/// `record_solutions` is set.
#[derive(Debug, Clone)]
pub struct SolveRecord {
    pub t: f64,
    pub x0: VehicleState,
    pub preview_loads: Vec<GeneralizedForce>,
    pub controls: Vec<Vector3<f64>>,
    pub states: Vec<Vector6<f64>>,
    pub applied: GeneralizedForce,
}

/// A finished or aborted run: the log is always present, `failure` carries
/// the abort reason when the loop did not complete.
#[derive(Debug, Clone)]
pub struct MissionOutcome {
    pub log: MissionLog,
    pub failure: Option<String>,
    pub solutions: Vec<SolveRecord>,
}

impl MissionOutcome {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

fn case_label(cfg: &ScenarioConfig) -> String {
    match &cfg.sea.source {
        SeaSource::Spectrum { spec } => format!(
            "hs{:.2}_tp{:.1}",
            spec.significant_wave_height, spec.peak_period
        ),
        SeaSource::Components { components } => {
            if components.iter().all(|c| c.height == 0.0) {
                "still".to_string()
            } else {
                format!("components{}", components.len())
            }
        }
    }
}

/// True generalized wave load on the vehicle at a given state and time.
fn true_load(
    sea: &SeaState,
    model: &VehicleModel,
    state: &VehicleState,
    t: f64,
) -> Result<GeneralizedForce, Error> {
    let depth = sea.depth;
    let nu = if model.params.relative_drag {
        Some((state.u(), state.w()))
    } else {
        None
    };
    wave_load(
        &model.params,
        state.x(),
        state.z().clamp(-depth, 0.0),
        state.theta(),
        nu,
        &|x, z| sea.particle_kinematics(x, z.clamp(-depth, 0.0), t),
    )
}

pub fn run_mission(cfg: &ScenarioConfig) -> Result<MissionOutcome, Error> {
    cfg.validate()?;
    let sea = cfg.sea.build()?;
    let model = VehicleModel::new(cfg.vehicle)?;
    let limits = actuator_limits(&cfg.vehicle);
    let reference = ReferenceTrajectory::generate(&cfg.mission);
    let mut predictor = WavePredictor::new(cfg.dswp, sea.depth, sea.gravity)?;
    let mut nmpc = NmpcController::new(cfg.nmpc, model.clone())?;

    let start = Vector3::from(cfg.mission.start);
    let mut truth = VehicleState::at_rest(start[0], start[1], start[2]);
    let mut ekf = Ekf::new(cfg.ekf, truth)?;

    let zero_noise = cfg.options.zero_noise_validation;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.options.sensor_seed);
    let noise: Vec<Normal<f64>> = cfg
        .options
        .sensor_noise
        .iter()
        .map(|&s| Normal::new(0.0, s.max(0.0)).unwrap())
        .collect();

    let dt = cfg.mission.dt;
    let n_steps = cfg.mission.steps();
    let horizon = cfg.nmpc.horizon;

    let mut log = MissionLog {
        rows: Vec::with_capacity(n_steps),
        dt,
        record_duration: cfg.mission.record_duration,
        case_label: case_label(cfg),
        controller: cfg.controller,
    };
    let mut failure = None;
    let mut solutions: Vec<SolveRecord> = Vec::new();

    'steps: for k in 0..n_steps {
        let t = k as f64 * dt;
        let phase: u8 = if t < cfg.mission.record_duration - 1e-9 {
            1
        } else {
            2
        };

        let mut fallible = || -> Result<LogRow, Error> {
            // Wave probe at the measuring point.
            predictor.record(sea.elevation(0.0, t), t)?;

            // Sensors and estimator update.
            let measurement = if zero_noise {
                Vector3::new(truth.x(), truth.z(), truth.theta())
            } else {
                Vector3::new(
                    truth.x() + noise[0].sample(&mut rng),
                    truth.z() + noise[1].sample(&mut rng),
                    truth.theta() + noise[2].sample(&mut rng),
                )
            };
            ekf.update(&measurement)?;
            let estimate = ekf.state.estimate;

            // Predictor refresh (no-op until the record is full).
            predictor.refresh_if_due(t)?;

            // Disturbance preview at the estimated pose. Station keeping
            // never consumes preview; ablation zeroes it.
            let preview: DisturbancePreview = if phase == 1 || cfg.options.ablate_preview {
                DisturbancePreview::zeros(t, dt, horizon)
            } else {
                let nu = if cfg.vehicle.relative_drag {
                    Some((estimate.u(), estimate.w()))
                } else {
                    None
                };
                predictor.preview(
                    estimate.x(),
                    estimate.z().clamp(-sea.depth, 0.0),
                    estimate.theta(),
                    nu,
                    t,
                    dt,
                    horizon,
                    &cfg.vehicle,
                )?
            };

            // Control law. Phase 1 station-keeps with the cascade for every
            // controller so phase 2 starts from comparable states.
            let mut solver_iterations = 0u32;
            let mut solver_kkt = 0.0;
            let mut solve_time_s = 0.0;
            let applied = if phase == 1 {
                cpd_control(&estimate, &start, &Vector3::zeros(), &cfg.cpd, &limits)
            } else {
                match cfg.controller {
                    ControllerKind::CascadedPd => cpd_control(
                        &estimate,
                        &reference.pose(t),
                        &reference.velocity(t),
                        &cfg.cpd,
                        &limits,
                    ),
                    ControllerKind::FeedForward => {
                        let (mu, _fallback) = ff_control(
                            &estimate,
                            &reference.pose(t),
                            &reference.velocity(t),
                            preview.loads.first().copied(),
                            &cfg.cpd,
                            &cfg.ff,
                            &limits,
                        );
                        mu
                    }
                    ControllerKind::Nmpc => {
                        let window: Vec<Vector6<f64>> = (1..=horizon)
                            .map(|i| reference.state(t + i as f64 * dt))
                            .collect();
                        let (mu, solution): (GeneralizedForce, ControlSolution) =
                            nmpc.step(&estimate, &window, &preview)?;
                        solver_iterations = solution.iterations as u32;
                        solver_kkt = solution.kkt_residual;
                        solve_time_s = solution.solve_time_s;
                        if cfg.options.record_solutions {
                            solutions.push(SolveRecord {
                                t,
                                x0: estimate,
                                preview_loads: preview.loads[..solution.horizon].to_vec(),
                                controls: solution.controls.clone(),
                                states: solution.states.clone(),
                                applied: mu,
                            });
                        }
                        mu
                    }
                }
            };
            if !limits.contains(applied, 1e-9) {
                return Err(Error::SolverFault(format!(
                    "applied control {applied:?} outside actuator box at t = {t}"
                )));
            }

            // Instantaneous true load and power at the pre-step state.
            let load_now = true_load(&sea, &model, &truth, t)?;
            let predicted_now = preview.loads.first().copied().unwrap_or(GeneralizedForce::ZERO);
            let power_mech = (applied.surge * truth.u()).abs()
                + (applied.heave * truth.w()).abs()
                + (applied.pitch * truth.q()).abs();
            // Body-frame water velocity at the vehicle for the propulsive
            // power: relative flow is what the thrusters push against.
            let (wu, ww) = sea.particle_velocity(
                truth.x(),
                truth.z().clamp(-sea.depth, 0.0),
                t,
            )?;
            let (st_sin, st_cos) = truth.theta().sin_cos();
            let water_u = wu * st_cos - ww * st_sin;
            let water_w = wu * st_sin + ww * st_cos;
            let power_prop = (applied.surge * (truth.u() - water_u)).abs()
                + (applied.heave * (truth.w() - water_w)).abs()
                + (applied.pitch * truth.q()).abs();
            let kt = cfg.power.thrust_coefficient;
            let power_elec = kt
                * (applied.surge.abs().powf(1.5)
                    + applied.heave.abs().powf(1.5)
                    + applied.pitch.abs().powf(1.5));

            let mut cov = [0.0; 6];
            for i in 0..6 {
                cov[i] = ekf.state.covariance[(i, i)];
            }
            let row = LogRow {
                t,
                phase,
                truth,
                estimate,
                reference: reference.state(t),
                applied,
                true_load: load_now,
                predicted_load: predicted_now,
                power_mech,
                power_prop,
                power_elec,
                covariance_diag: cov,
                covariance_min_eig: ekf.covariance_min_eigenvalue(),
                solver_iterations,
                solver_kkt,
                solve_time_s,
                preview_len: preview.len() as u32,
            };

            // Truth propagation through the continuous wave-load field.
            truth = model.rk4_step(&truth, t, dt, &|_| applied, &|tt, s| {
                true_load(&sea, &model, s, tt).unwrap_or(GeneralizedForce::ZERO)
            })?;
            if !truth.is_finite() {
                return Err(Error::NonFiniteState {
                    t,
                    what: "truth state".into(),
                });
            }

            // Estimator prediction to the next step.
            if zero_noise {
                ekf.predict_with(
                    &model,
                    applied,
                    &|tt, s| true_load(&sea, &model, s, tt).unwrap_or(GeneralizedForce::ZERO),
                    t,
                    dt,
                )?;
            } else {
                let ekf_load = if cfg.options.ekf_uses_preview {
                    predicted_now
                } else {
                    GeneralizedForce::ZERO
                };
                ekf.predict(&model, applied, ekf_load, dt)?;
            }
            Ok(row)
        };

        match fallible() {
            Ok(row) => log.rows.push(row),
            Err(e) => {
                failure = Some(format!("aborted at t = {t:.1}: {e}"));
                break 'steps;
            }
        }
    }

    Ok(MissionOutcome { log, failure, solutions })
}
