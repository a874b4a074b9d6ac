//! Receding-horizon predictive controller: multiple-shooting transcription
//! of the vehicle dynamics with a per-stage disturbance preview, solved by
//! the in-crate SQP solver.

mod problem;
mod qp;
mod sqp;

pub use problem::{NlpProblem, StageDynamics};
pub use sqp::{solve_nlp, ControlSolution, SqpSettings, WarmStart};

use crate::dswp::DisturbancePreview;
use crate::error::Error;
use crate::vehicle::{
    actuator_limits, ActuatorLimits, GeneralizedForce, VehicleModel, VehicleState,
};
use nalgebra::{Vector3, Vector6};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmpcConfig {
    /// Horizon length N_c in steps.
    pub horizon: usize,
    /// Step length (s).
    pub dt: f64,
    /// Stage weights on pose error (x, z, θ).
    pub q_pose: [f64; 3],
    /// Stage weights on velocity error.
    pub q_velocity: [f64; 3],
    /// Terminal weights on pose error.
    pub p_pose: [f64; 3],
    /// Terminal weights on velocity error.
    pub p_velocity: [f64; 3],
    /// Control weights, applied to controls scaled by the actuator bounds
    /// (a unit weight penalizes utilization fraction, not newtons).
    pub r_control: [f64; 3],
    /// Per-DoF terminal ball around the reference pose (m, m, rad).
    pub terminal_radius: [f64; 3],
    pub kkt_tolerance: f64,
    pub feasibility_tolerance: f64,
    pub max_iterations: usize,
    pub warm_start: bool,
}

impl Default for NmpcConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            dt: 0.1,
            q_pose: [250.0, 250.0, 250.0],
            q_velocity: [0.0, 0.0, 0.0],
            p_pose: [250.0, 250.0, 250.0],
            p_velocity: [0.0, 0.0, 0.0],
            r_control: [1.0, 1.0, 1.0],
            terminal_radius: [0.25, 0.25, 0.15],
            kkt_tolerance: 1e-6,
            feasibility_tolerance: 1e-8,
            max_iterations: 60,
            warm_start: true,
        }
    }
}

impl NmpcConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be > 0".into()));
        }
        let weights = self
            .q_pose
            .iter()
            .chain(self.q_velocity.iter())
            .chain(self.p_pose.iter())
            .chain(self.p_velocity.iter())
            .chain(self.r_control.iter());
        for w in weights {
            if !(*w >= 0.0) {
                return Err(Error::InvalidParameter("weights must be >= 0".into()));
            }
        }
        for r in &self.terminal_radius {
            if !(*r > 0.0) {
                return Err(Error::InvalidParameter(
                    "terminal radius must be > 0".into(),
                ));
            }
        }
        if !(self.kkt_tolerance > 0.0) || !(self.feasibility_tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        Ok(())
    }

    fn settings(&self) -> SqpSettings {
        SqpSettings {
            kkt_tolerance: self.kkt_tolerance,
            feasibility_tolerance: self.feasibility_tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

/// Vehicle RK4 as discrete stage dynamics with the preview load injected
/// per stage (constant over each step).
pub struct VehicleStageDynamics<'a> {
    pub model: &'a VehicleModel,
    pub dt: f64,
    pub loads: &'a [GeneralizedForce],
}

impl StageDynamics for VehicleStageDynamics<'_> {
    fn step(&self, k: usize, x: &Vector6<f64>, mu: &Vector3<f64>) -> Vector6<f64> {
        let load = self.loads.get(k).copied().unwrap_or(GeneralizedForce::ZERO);
        self.model
            .rk4_step_held_continuous(x, self.dt, GeneralizedForce::from_vector(mu), load)
    }
}

/// Build the multiple-shooting NLP over `horizon` stages.
///
/// `reference` holds the stage references for k = 1..=horizon (pose and
/// velocity); `preview_len` is the number of disturbance entries available —
/// shorter than the horizon is a hard error, the caller truncates first.
pub fn transcribe<'a>(
    dynamics: &'a dyn StageDynamics,
    x0: &VehicleState,
    reference: &[Vector6<f64>],
    preview_len: usize,
    cfg: &NmpcConfig,
    mu_prev: Vector3<f64>,
    limits: &ActuatorLimits,
    horizon: usize,
) -> Result<NlpProblem<'a>, Error> {
    cfg.validate()?;
    if preview_len < horizon {
        return Err(Error::HorizonMismatch {
            horizon,
            preview: preview_len,
        });
    }
    if reference.len() < horizon {
        return Err(Error::InvalidParameter(format!(
            "reference window has {} stages, horizon needs {horizon}",
            reference.len()
        )));
    }
    let q = Vector6::new(
        cfg.q_pose[0], cfg.q_pose[1], cfg.q_pose[2], cfg.q_velocity[0], cfg.q_velocity[1],
        cfg.q_velocity[2],
    );
    let p = Vector6::new(
        cfg.p_pose[0], cfg.p_pose[1], cfg.p_pose[2], cfg.p_velocity[0], cfg.p_velocity[1],
        cfg.p_velocity[2],
    );
    let terminal_ref = reference[horizon - 1];
    let problem = NlpProblem {
        dynamics,
        x0: x0.as_vector6(),
        x_ref: reference[..horizon].to_vec(),
        n_stages: horizon,
        q_weight: q,
        p_weight: p,
        r_weight: Vector3::from(cfg.r_control),
        mu_prev,
        mu_scale: limits.as_vector(),
        mu_bounds: limits.as_vector(),
        terminal_center: Vector3::new(terminal_ref[0], terminal_ref[1], terminal_ref[2]),
        terminal_radius: Vector3::from(cfg.terminal_radius),
    };
    problem.validate()?;
    Ok(problem)
}

/// Stateful receding-horizon controller: keeps the previous solution for
/// warm starting and the previously applied control for the rate term.
#[derive(Debug, Clone)]
pub struct NmpcController {
    pub cfg: NmpcConfig,
    model: VehicleModel,
    limits: ActuatorLimits,
    prev_solution: Option<ControlSolution>,
    last_applied: Vector3<f64>,
}

impl NmpcController {
    pub fn new(cfg: NmpcConfig, model: VehicleModel) -> Result<Self, Error> {
        cfg.validate()?;
        let limits = actuator_limits(&model.params);
        // Sensible rate-term anchor before the first solve: the hover force.
        let hover = Vector3::new(0.0, model.params.weight - model.params.buoyancy, 0.0);
        Ok(Self {
            cfg,
            model,
            limits,
            prev_solution: None,
            last_applied: hover,
        })
    }

    pub fn limits(&self) -> &ActuatorLimits {
        &self.limits
    }

    pub fn reset(&mut self) {
        self.prev_solution = None;
    }

    fn shifted_warm_start(&self, horizon: usize) -> Option<WarmStart> {
        if !self.cfg.warm_start {
            return None;
        }
        let prev = self.prev_solution.as_ref()?;
        if prev.controls.is_empty() {
            return None;
        }
        let pick = |v: &[Vector3<f64>], k: usize| v[(k + 1).min(v.len() - 1)];
        let pick_x = |v: &[Vector6<f64>], k: usize| v[(k + 1).min(v.len() - 1)];
        Some(WarmStart {
            controls: (0..horizon).map(|k| pick(&prev.controls, k)).collect(),
            states: (0..horizon).map(|k| pick_x(&prev.states, k)).collect(),
        })
    }

    /// One receding-horizon step: transcribe at the current estimate, solve,
    /// apply the first control. The horizon shrinks to the preview length
    /// when the prediction runs out early (flagged on the solution).
    pub fn step(
        &mut self,
        x_hat: &VehicleState,
        reference: &[Vector6<f64>],
        preview: &DisturbancePreview,
    ) -> Result<(GeneralizedForce, ControlSolution), Error> {
        let horizon = self
            .cfg
            .horizon
            .min(preview.len())
            .min(reference.len())
            .max(1);
        if preview.is_empty() {
            return Err(Error::HorizonMismatch {
                horizon: self.cfg.horizon,
                preview: 0,
            });
        }
        let truncated = horizon < self.cfg.horizon;
        let dynamics = VehicleStageDynamics {
            model: &self.model,
            dt: self.cfg.dt,
            loads: &preview.loads[..horizon],
        };
        let problem = transcribe(
            &dynamics,
            x_hat,
            reference,
            preview.len(),
            &self.cfg,
            self.last_applied,
            &self.limits,
            horizon,
        )?;
        let warm = self.shifted_warm_start(horizon);
        let mut solution = solve_nlp(&problem, warm.as_ref(), &self.cfg.settings())?;
        solution.horizon_truncated = truncated;
        let applied = self
            .limits
            .clamp(GeneralizedForce::from_vector(&solution.controls[0]));
        self.last_applied = applied.as_vector();
        self.prev_solution = Some(solution.clone());
        Ok((applied, solution))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::VehicleParams;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3, Matrix6, Matrix6x3};

    struct LinearPlant {
        a: Matrix6<f64>,
        b: Matrix6x3<f64>,
    }

    impl StageDynamics for LinearPlant {
        fn step(&self, _k: usize, x: &Vector6<f64>, mu: &Vector3<f64>) -> Vector6<f64> {
            self.a * x + self.b * mu
        }
    }

    fn plant() -> LinearPlant {
        let mut a = Matrix6::identity();
        for i in 0..3 {
            a[(i, i + 3)] = 0.1;
        }
        a[(3, 3)] = 0.95;
        a[(4, 4)] = 0.95;
        a[(5, 5)] = 0.9;
        let mut b = Matrix6x3::zeros();
        for i in 0..3 {
            b[(i + 3, i)] = 0.02;
        }
        LinearPlant { a, b }
    }

    fn wide_open_problem<'a>(
        plant: &'a LinearPlant,
        n: usize,
        x0: Vector6<f64>,
        x_ref: Vector6<f64>,
    ) -> NlpProblem<'a> {
        NlpProblem {
            dynamics: plant,
            x0,
            x_ref: vec![x_ref; n],
            n_stages: n,
            q_weight: Vector6::new(250.0, 250.0, 250.0, 0.0, 0.0, 0.0),
            p_weight: Vector6::new(250.0, 250.0, 250.0, 0.0, 0.0, 0.0),
            r_weight: Vector3::repeat(1.0),
            mu_prev: Vector3::zeros(),
            mu_scale: Vector3::new(98.99, 98.99, 8.4),
            mu_bounds: Vector3::new(1e6, 1e6, 1e6),
            terminal_center: Vector3::new(x_ref[0], x_ref[1], x_ref[2]),
            terminal_radius: Vector3::repeat(1e6),
        }
    }

    #[test]
    fn single_stage_matches_closed_form_least_squares() {
        // One stage, no active bounds: minimize
        // (Ax0 + Bμ − r)ᵀP(Ax0 + Bμ − r) + sᵀRs + ΔsᵀRΔs over μ.
        // With μ_prev = 0 both control terms equal sᵀRs, so the optimality
        // system is (BᵀPB + 2·R̃)μ = BᵀP(r − Ax0), R̃ = R ⊘ scale².
        let lp = plant();
        let x0 = Vector6::new(0.1, -0.2, 0.05, 0.0, 0.0, 0.0);
        let x_ref = Vector6::new(0.15, -0.1, 0.0, 0.0, 0.0, 0.0);
        let problem = wide_open_problem(&lp, 1, x0, x_ref);
        let sol = solve_nlp(&problem, None, &SqpSettings::default()).unwrap();

        let p_mat = Matrix6::from_diagonal(&problem.p_weight);
        let r_tilde = Matrix3::from_diagonal(&Vector3::new(
            problem.r_weight[0] / (problem.mu_scale[0] * problem.mu_scale[0]),
            problem.r_weight[1] / (problem.mu_scale[1] * problem.mu_scale[1]),
            problem.r_weight[2] / (problem.mu_scale[2] * problem.mu_scale[2]),
        ));
        let lhs = lp.b.transpose() * p_mat * lp.b + 2.0 * r_tilde;
        let rhs = lp.b.transpose() * p_mat * (x_ref - lp.a * x0);
        let expected = lhs.lu().solve(&rhs).unwrap();
        for i in 0..3 {
            assert_relative_eq!(sol.controls[0][i], expected[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn zero_weights_return_feasible_point() {
        let lp = plant();
        let mut problem = wide_open_problem(&lp, 5, Vector6::zeros(), Vector6::zeros());
        problem.q_weight = Vector6::zeros();
        problem.p_weight = Vector6::zeros();
        problem.r_weight = Vector3::zeros();
        let sol = solve_nlp(&problem, None, &SqpSettings::default()).unwrap();
        // Re-simulate: returned states must be the rollout of the controls.
        let rolled = problem.rollout(&sol.controls);
        for (a, b) in sol.states.iter().zip(rolled.iter()) {
            assert!((a - b).amax() < 1e-12);
        }
        assert!(!sol.suboptimal);
    }

    #[test]
    fn warm_start_from_optimum_converges_immediately() {
        let lp = plant();
        let x0 = Vector6::new(0.3, 0.1, -0.05, 0.0, 0.0, 0.0);
        let x_ref = Vector6::zeros();
        let problem = wide_open_problem(&lp, 8, x0, x_ref);
        let cold = solve_nlp(&problem, None, &SqpSettings::default()).unwrap();
        let warm = WarmStart {
            controls: cold.controls.clone(),
            states: cold.states.clone(),
        };
        let re = solve_nlp(&problem, Some(&warm), &SqpSettings::default()).unwrap();
        assert!(
            re.iterations <= 2,
            "warm restart took {} iterations",
            re.iterations
        );
        assert_relative_eq!(re.cost, cold.cost, max_relative = 1e-9);
    }

    #[test]
    fn tightening_kkt_tolerance_does_not_raise_cost() {
        let lp = plant();
        let x0 = Vector6::new(0.4, -0.3, 0.1, 0.0, 0.0, 0.0);
        let problem = wide_open_problem(&lp, 6, x0, Vector6::zeros());
        let loose = solve_nlp(
            &problem,
            None,
            &SqpSettings {
                kkt_tolerance: 1e-4,
                ..Default::default()
            },
        )
        .unwrap();
        let tight = solve_nlp(
            &problem,
            None,
            &SqpSettings {
                kkt_tolerance: 1e-8,
                max_iterations: 80,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(tight.cost <= loose.cost * (1.0 + 1e-6) + 1e-12);
    }

    #[test]
    fn control_bounds_are_respected_exactly() {
        let lp = plant();
        let mut problem = wide_open_problem(
            &lp,
            5,
            Vector6::new(5.0, -5.0, 0.5, 0.0, 0.0, 0.0),
            Vector6::zeros(),
        );
        problem.mu_bounds = Vector3::new(10.0, 10.0, 1.0);
        let sol = solve_nlp(&problem, None, &SqpSettings::default()).unwrap();
        for mu in &sol.controls {
            for i in 0..3 {
                assert!(mu[i].abs() <= problem.mu_bounds[i] + 1e-12);
            }
        }
        // Far-away target with tight bounds: saturation expected somewhere.
        assert!(sol
            .controls
            .iter()
            .any(|mu| (0..3).any(|i| (mu[i].abs() - problem.mu_bounds[i]).abs() < 1e-9)));
    }

    #[test]
    fn transcribe_rejects_short_preview() {
        let model = VehicleModel::new(VehicleParams::default()).unwrap();
        let cfg = NmpcConfig::default();
        let limits = actuator_limits(&model.params);
        let loads = vec![GeneralizedForce::ZERO; 10];
        let dynamics = VehicleStageDynamics {
            model: &model,
            dt: 0.1,
            loads: &loads,
        };
        let reference = vec![Vector6::zeros(); 20];
        let out = transcribe(
            &dynamics,
            &VehicleState::at_rest(0.0, -5.0, 0.0),
            &reference,
            10,
            &cfg,
            Vector3::zeros(),
            &limits,
            20,
        );
        assert!(matches!(out, Err(Error::HorizonMismatch { .. })));
    }

    #[test]
    fn solver_is_deterministic() {
        let lp = plant();
        let x0 = Vector6::new(0.2, 0.2, -0.1, 0.1, 0.0, 0.0);
        let problem = wide_open_problem(&lp, 10, x0, Vector6::zeros());
        let a = solve_nlp(&problem, None, &SqpSettings::default()).unwrap();
        let b = solve_nlp(&problem, None, &SqpSettings::default()).unwrap();
        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
        for (x, y) in a.controls.iter().zip(b.controls.iter()) {
            assert_eq!(x, y);
        }
    }
}
