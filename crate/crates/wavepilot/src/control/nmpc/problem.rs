//! Multiple-shooting transcription: states and controls at every stage are
//! decision variables, tied together by integration-defect equality
//! constraints.
//!
//! Decision vector layout, stage-major: z = [μ₀, x₁, μ₁, x₂, …, μ_{N−1}, x_N]
//! (3 control + 6 state entries per stage, 9N variables total). All
//! inequality constraints are variable bounds: the actuator box on every μ_k
//! and the per-DoF terminal ball on the pose entries of x_N.

use crate::error::Error;
use nalgebra::{DMatrix, DVector, Vector3, Vector6};

pub const NX: usize = 6;
pub const NU: usize = 3;
pub const STAGE: usize = NX + NU;

/// Discrete stage dynamics x_{k+1} = F(k, x_k, μ_k). Implementations must be
/// deterministic; non-finite outputs are tolerated and rejected by the
/// solver's line search.
pub trait StageDynamics {
    fn step(&self, k: usize, x: &Vector6<f64>, mu: &Vector3<f64>) -> Vector6<f64>;
}

/// One reference-tracking NLP instance over a horizon of `n_stages` steps.
pub struct NlpProblem<'a> {
    pub dynamics: &'a dyn StageDynamics,
    pub x0: Vector6<f64>,
    /// References for stages 1..=N (index k−1 holds the stage-k reference).
    pub x_ref: Vec<Vector6<f64>>,
    pub n_stages: usize,
    /// Stage state weight diagonal (applied to stages 1..N−1).
    pub q_weight: Vector6<f64>,
    /// Terminal state weight diagonal (stage N).
    pub p_weight: Vector6<f64>,
    /// Control weight diagonal, applied to scaled controls μ ⊘ mu_scale for
    /// both the magnitude and the rate term.
    pub r_weight: Vector3<f64>,
    /// Previously applied control (anchors the first rate term).
    pub mu_prev: Vector3<f64>,
    /// Control normalization divisors (> 0), typically the actuator bounds.
    pub mu_scale: Vector3<f64>,
    /// Symmetric actuator box half-widths.
    pub mu_bounds: Vector3<f64>,
    /// Per-DoF terminal ball on the pose of x_N.
    pub terminal_center: Vector3<f64>,
    pub terminal_radius: Vector3<f64>,
}

impl<'a> NlpProblem<'a> {
    pub fn n_vars(&self) -> usize {
        STAGE * self.n_stages
    }

    pub fn n_eq(&self) -> usize {
        NX * self.n_stages
    }

    pub fn mu_offset(&self, k: usize) -> usize {
        STAGE * k
    }

    /// Offset of x_{k+1} for stage k.
    pub fn state_offset(&self, k: usize) -> usize {
        STAGE * k + NU
    }

    pub fn get_mu(&self, z: &DVector<f64>, k: usize) -> Vector3<f64> {
        let o = self.mu_offset(k);
        Vector3::new(z[o], z[o + 1], z[o + 2])
    }

    /// State at stage k (k = 0 returns the fixed initial state).
    pub fn get_state(&self, z: &DVector<f64>, k: usize) -> Vector6<f64> {
        if k == 0 {
            return self.x0;
        }
        let o = self.state_offset(k - 1);
        Vector6::new(z[o], z[o + 1], z[o + 2], z[o + 3], z[o + 4], z[o + 5])
    }

    /// Variable bounds (±∞ on unconstrained states).
    pub fn bounds(&self) -> (DVector<f64>, DVector<f64>) {
        let n = self.n_vars();
        let mut lo = DVector::from_element(n, f64::NEG_INFINITY);
        let mut hi = DVector::from_element(n, f64::INFINITY);
        for k in 0..self.n_stages {
            let o = self.mu_offset(k);
            for i in 0..NU {
                lo[o + i] = -self.mu_bounds[i];
                hi[o + i] = self.mu_bounds[i];
            }
        }
        let terminal = self.state_offset(self.n_stages - 1);
        for i in 0..3 {
            lo[terminal + i] = self.terminal_center[i] - self.terminal_radius[i];
            hi[terminal + i] = self.terminal_center[i] + self.terminal_radius[i];
        }
        (lo, hi)
    }

    fn scaled(&self, mu: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            mu[0] / self.mu_scale[0],
            mu[1] / self.mu_scale[1],
            mu[2] / self.mu_scale[2],
        )
    }

    /// Objective: terminal quadratic plus stage quadratics plus control
    /// magnitude and rate terms on the scaled controls.
    pub fn cost(&self, z: &DVector<f64>) -> f64 {
        let n = self.n_stages;
        let mut total = 0.0;
        // Stage weights cover x_1..x_{N−1}; x_N carries the terminal weight.
        for k in 1..=n {
            let err = self.get_state(z, k) - self.x_ref[k - 1];
            let w = if k == n { &self.p_weight } else { &self.q_weight };
            for i in 0..NX {
                total += w[i] * err[i] * err[i];
            }
        }
        let mut prev = self.scaled(&self.mu_prev);
        for k in 0..n {
            let s = self.scaled(&self.get_mu(z, k));
            let ds = s - prev;
            for i in 0..NU {
                total += self.r_weight[i] * (s[i] * s[i] + ds[i] * ds[i]);
            }
            prev = s;
        }
        total
    }

    /// Gradient of [`Self::cost`].
    pub fn cost_gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let n = self.n_stages;
        let mut g = DVector::zeros(self.n_vars());
        for k in 1..=n {
            let err = self.get_state(z, k) - self.x_ref[k - 1];
            let w = if k == n { &self.p_weight } else { &self.q_weight };
            let o = self.state_offset(k - 1);
            for i in 0..NX {
                g[o + i] += 2.0 * w[i] * err[i];
            }
        }
        // Control terms: d/dμ of sᵀRs + ΔsᵀRΔs with s = μ ⊘ scale.
        let mut prev = self.scaled(&self.mu_prev);
        for k in 0..n {
            let s = self.scaled(&self.get_mu(z, k));
            let ds = s - prev;
            let o = self.mu_offset(k);
            for i in 0..NU {
                g[o + i] += 2.0 * self.r_weight[i] * (s[i] + ds[i]) / self.mu_scale[i];
            }
            if k + 1 < n {
                let s_next = self.scaled(&self.get_mu(z, k + 1));
                let ds_next = s_next - s;
                for i in 0..NU {
                    g[o + i] += -2.0 * self.r_weight[i] * ds_next[i] / self.mu_scale[i];
                }
            }
            prev = s;
        }
        g
    }

    /// Constant Gauss-type Hessian of the objective (exact: the objective is
    /// quadratic in z).
    pub fn cost_hessian(&self) -> DMatrix<f64> {
        let n = self.n_stages;
        let mut h = DMatrix::zeros(self.n_vars(), self.n_vars());
        for k in 1..=n {
            let w = if k == n { &self.p_weight } else { &self.q_weight };
            let o = self.state_offset(k - 1);
            for i in 0..NX {
                h[(o + i, o + i)] += 2.0 * w[i];
            }
        }
        for k in 0..n {
            let o = self.mu_offset(k);
            for i in 0..NU {
                let inv = 1.0 / self.mu_scale[i];
                // Magnitude term.
                h[(o + i, o + i)] += 2.0 * self.r_weight[i] * inv * inv;
                // Rate term Δs_k couples μ_k with μ_{k−1}.
                h[(o + i, o + i)] += 2.0 * self.r_weight[i] * inv * inv;
                if k > 0 {
                    let po = self.mu_offset(k - 1);
                    h[(po + i, po + i)] += 2.0 * self.r_weight[i] * inv * inv;
                    h[(o + i, po + i)] += -2.0 * self.r_weight[i] * inv * inv;
                    h[(po + i, o + i)] += -2.0 * self.r_weight[i] * inv * inv;
                }
            }
        }
        h
    }

    /// Defect residuals c_k = x_{k+1} − F(k, x_k, μ_k), stacked.
    pub fn defects(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut c = DVector::zeros(self.n_eq());
        for k in 0..self.n_stages {
            let predicted = self.dynamics.step(k, &self.get_state(z, k), &self.get_mu(z, k));
            let actual = self.get_state(z, k + 1);
            for i in 0..NX {
                c[NX * k + i] = actual[i] - predicted[i];
            }
        }
        c
    }

    /// Jacobian of the defects by central differences on each stage map.
    pub fn defect_jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.n_eq(), self.n_vars());
        let fd = 1e-6;
        for k in 0..self.n_stages {
            let row = NX * k;
            // ∂c_k/∂x_{k+1} = I.
            let next_col = self.state_offset(k);
            for i in 0..NX {
                jac[(row + i, next_col + i)] = 1.0;
            }
            let x = self.get_state(z, k);
            let mu = self.get_mu(z, k);
            // ∂c_k/∂μ_k = −∂F/∂μ.
            let mu_col = self.mu_offset(k);
            for j in 0..NU {
                let h = fd * mu[j].abs().max(1.0);
                let mut plus = mu;
                plus[j] += h;
                let mut minus = mu;
                minus[j] -= h;
                let fp = self.dynamics.step(k, &x, &plus);
                let fm = self.dynamics.step(k, &x, &minus);
                for i in 0..NX {
                    jac[(row + i, mu_col + j)] = -(fp[i] - fm[i]) / (2.0 * h);
                }
            }
            // ∂c_k/∂x_k = −∂F/∂x (absent for k = 0: x_0 is data).
            if k > 0 {
                let x_col = self.state_offset(k - 1);
                for j in 0..NX {
                    let h = fd * x[j].abs().max(1.0);
                    let mut plus = x;
                    plus[j] += h;
                    let mut minus = x;
                    minus[j] -= h;
                    let fp = self.dynamics.step(k, &plus, &mu);
                    let fm = self.dynamics.step(k, &minus, &mu);
                    for i in 0..NX {
                        jac[(row + i, x_col + j)] = -(fp[i] - fm[i]) / (2.0 * h);
                    }
                }
            }
        }
        jac
    }

    /// Assemble z from explicit control and state sequences.
    pub fn pack(&self, controls: &[Vector3<f64>], states: &[Vector6<f64>]) -> DVector<f64> {
        assert_eq!(controls.len(), self.n_stages);
        assert_eq!(states.len(), self.n_stages);
        let mut z = DVector::zeros(self.n_vars());
        for k in 0..self.n_stages {
            let mo = self.mu_offset(k);
            for i in 0..NU {
                z[mo + i] = controls[k][i];
            }
            let so = self.state_offset(k);
            for i in 0..NX {
                z[so + i] = states[k][i];
            }
        }
        z
    }

    /// Roll the dynamics forward under `controls`; returns states x_1..x_N.
    pub fn rollout(&self, controls: &[Vector3<f64>]) -> Vec<Vector6<f64>> {
        let mut states = Vec::with_capacity(controls.len());
        let mut x = self.x0;
        for (k, mu) in controls.iter().enumerate() {
            x = self.dynamics.step(k, &x, mu);
            states.push(x);
        }
        states
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n_stages == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if self.x_ref.len() < self.n_stages {
            return Err(Error::InvalidParameter(format!(
                "reference window covers {} stages, horizon needs {}",
                self.x_ref.len(),
                self.n_stages
            )));
        }
        for i in 0..NU {
            if !(self.mu_scale[i] > 0.0) || !(self.mu_bounds[i] > 0.0) {
                return Err(Error::InvalidParameter(
                    "control scale and bounds must be > 0".into(),
                ));
            }
        }
        for i in 0..3 {
            if !(self.terminal_radius[i] > 0.0) {
                return Err(Error::InvalidParameter(
                    "terminal radius must be > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    /// Linear test plant x⁺ = A x + B μ.
    pub struct LinearPlant {
        pub a: nalgebra::Matrix6<f64>,
        pub b: nalgebra::Matrix6x3<f64>,
    }

    impl StageDynamics for LinearPlant {
        fn step(&self, _k: usize, x: &Vector6<f64>, mu: &Vector3<f64>) -> Vector6<f64> {
            self.a * x + self.b * mu
        }
    }

    fn toy_plant() -> LinearPlant {
        let mut a = nalgebra::Matrix6::identity();
        for i in 0..3 {
            a[(i, i + 3)] = 0.1;
        }
        let mut b = nalgebra::Matrix6x3::zeros();
        for i in 0..3 {
            b[(i + 3, i)] = 0.05;
        }
        LinearPlant { a, b }
    }

    fn toy_problem(plant: &LinearPlant, n: usize) -> NlpProblem<'_> {
        NlpProblem {
            dynamics: plant,
            x0: Vector6::zeros(),
            x_ref: vec![Vector6::repeat(0.1); n],
            n_stages: n,
            q_weight: Vector6::new(250.0, 250.0, 250.0, 0.0, 0.0, 0.0),
            p_weight: Vector6::new(250.0, 250.0, 250.0, 0.0, 0.0, 0.0),
            r_weight: Vector3::repeat(1.0),
            mu_prev: Vector3::zeros(),
            mu_scale: Vector3::new(98.99, 98.99, 8.4),
            mu_bounds: Vector3::new(98.99, 98.99, 8.4),
            terminal_center: Vector3::repeat(0.1),
            terminal_radius: Vector3::new(0.25, 0.25, 0.15),
        }
    }

    #[test]
    fn decision_vector_count_matches_horizon() {
        let plant = toy_plant();
        let p = toy_problem(&plant, 20);
        assert_eq!(p.n_vars(), 180);
        assert_eq!(p.n_eq(), 120);
    }

    #[test]
    fn cost_matches_naive_summation_oracle() {
        let plant = toy_plant();
        let n = 7;
        let p = toy_problem(&plant, n);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let z = DVector::from_fn(p.n_vars(), |_, _| rng.gen_range(-3.0..3.0));
            // Naive term-by-term reimplementation.
            let mut expected = 0.0;
            for k in 1..=n {
                let x = p.get_state(&z, k);
                let r = p.x_ref[k - 1];
                let w = if k == n { p.p_weight } else { p.q_weight };
                for i in 0..6 {
                    expected += w[i] * (x[i] - r[i]) * (x[i] - r[i]);
                }
            }
            let scale = p.mu_scale;
            let mut prev = Vector3::new(
                p.mu_prev[0] / scale[0],
                p.mu_prev[1] / scale[1],
                p.mu_prev[2] / scale[2],
            );
            for k in 0..n {
                let mu = p.get_mu(&z, k);
                let s = Vector3::new(mu[0] / scale[0], mu[1] / scale[1], mu[2] / scale[2]);
                for i in 0..3 {
                    expected += p.r_weight[i] * s[i] * s[i];
                    let d = s[i] - prev[i];
                    expected += p.r_weight[i] * d * d;
                }
                prev = s;
            }
            assert_relative_eq!(p.cost(&z), expected, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let plant = toy_plant();
        let p = toy_problem(&plant, 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let z = DVector::from_fn(p.n_vars(), |_, _| rng.gen_range(-2.0..2.0));
        let grad = p.cost_gradient(&z);
        let h = 1e-6;
        for i in 0..p.n_vars() {
            let mut zp = z.clone();
            zp[i] += h;
            let mut zm = z.clone();
            zm[i] -= h;
            let fd = (p.cost(&zp) - p.cost(&zm)) / (2.0 * h);
            assert_relative_eq!(grad[i], fd, epsilon = 1e-5, max_relative = 1e-5);
        }
    }

    #[test]
    fn hessian_consistent_with_gradient() {
        // Quadratic objective: ∇f(z) = ∇f(0) + H z exactly.
        let plant = toy_plant();
        let p = toy_problem(&plant, 4);
        let h = p.cost_hessian();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let z = DVector::from_fn(p.n_vars(), |_, _| rng.gen_range(-2.0..2.0));
        let lhs = p.cost_gradient(&z);
        let rhs = p.cost_gradient(&DVector::zeros(p.n_vars())) + &h * &z;
        assert!((lhs - rhs).amax() < 1e-9);
    }

    #[test]
    fn defects_vanish_on_rollout() {
        let plant = toy_plant();
        let p = toy_problem(&plant, 6);
        let controls = vec![Vector3::new(5.0, -3.0, 0.5); 6];
        let states = p.rollout(&controls);
        let z = p.pack(&controls, &states);
        assert!(p.defects(&z).amax() < 1e-12);
    }

    #[test]
    fn defect_jacobian_matches_finite_differences() {
        let plant = toy_plant();
        let p = toy_problem(&plant, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let z = DVector::from_fn(p.n_vars(), |_, _| rng.gen_range(-1.0..1.0));
        let jac = p.defect_jacobian(&z);
        let h = 1e-6;
        for col in 0..p.n_vars() {
            let mut zp = z.clone();
            zp[col] += h;
            let mut zm = z.clone();
            zm[col] -= h;
            let fd = (p.defects(&zp) - p.defects(&zm)) / (2.0 * h);
            for row in 0..p.n_eq() {
                assert_relative_eq!(jac[(row, col)], fd[row], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn bounds_cover_controls_and_terminal_pose() {
        let plant = toy_plant();
        let p = toy_problem(&plant, 3);
        let (lo, hi) = p.bounds();
        assert_eq!(lo[0], -98.99);
        assert_eq!(hi[2], 8.4);
        // Interior states unbounded.
        assert_eq!(lo[p.state_offset(0)], f64::NEG_INFINITY);
        // Terminal pose boxed.
        let t = p.state_offset(2);
        assert_relative_eq!(lo[t], 0.1 - 0.25, epsilon = 1e-12);
        assert_relative_eq!(hi[t + 2], 0.1 + 0.15, epsilon = 1e-12);
        assert_eq!(hi[t + 3], f64::INFINITY);
    }
}
