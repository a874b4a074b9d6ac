//! Sequential quadratic programming over the multiple-shooting problem.
//!
//! Each iteration linearizes the defects, eliminates the state variables
//! through the linearized dynamics (condensing), and solves an active-set
//! QP over the controls with the actuator box as bounds and the terminal
//! ball as general rows. The curvature model is the exact Hessian of the
//! (quadratic) objective; steps go through an ℓ1 merit line search. Every
//! returned solution carries rollout-consistent states, so re-simulating
//! the control sequence reproduces them exactly.

use super::problem::{NlpProblem, NU, NX};
use super::qp::{solve_box_qp, BoundState, QpData};
use crate::error::Error;
use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use std::time::Instant;

#[derive(Debug, Clone, Copy)]
pub struct SqpSettings {
    pub kkt_tolerance: f64,
    pub feasibility_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SqpSettings {
    fn default() -> Self {
        Self {
            kkt_tolerance: 1e-6,
            feasibility_tolerance: 1e-8,
            max_iterations: 60,
        }
    }
}

/// Warm start: the previous solution already shifted by one stage.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub controls: Vec<Vector3<f64>>,
    pub states: Vec<Vector6<f64>>,
}

#[derive(Debug, Clone)]
pub struct ControlSolution {
    /// μ_0..μ_{N−1}, inside the actuator box.
    pub controls: Vec<Vector3<f64>>,
    /// x_1..x_N, the exact rollout of `controls` through the stage dynamics.
    pub states: Vec<Vector6<f64>>,
    pub cost: f64,
    /// QP subproblems solved.
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Defect infinity-norm of the SQP iterate before rollout restoration.
    pub constraint_violation: f64,
    pub solve_time_s: f64,
    /// Iteration limit hit before the KKT tolerance was met.
    pub suboptimal: bool,
    /// Times the terminal ball was doubled to restore feasibility.
    pub terminal_relaxations: u32,
    pub horizon: usize,
    /// Set by the controller when the preview forced a shorter horizon.
    pub horizon_truncated: bool,
}

enum AttemptOutcome {
    Solved(Box<ControlSolution>),
    TerminalInfeasible,
}

/// Stationarity residual with bound multipliers implied by the active set.
fn kkt_residual(
    grad: &DVector<f64>,
    jac: &DMatrix<f64>,
    lambda: &DVector<f64>,
    z: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> f64 {
    let stat = grad - jac.transpose() * lambda;
    let mut worst = 0.0_f64;
    for i in 0..z.len() {
        let scale = 1.0 + z[i].abs();
        let at_lower = z[i] - lo[i] <= 1e-9 * scale;
        let at_upper = hi[i] - z[i] <= 1e-9 * scale;
        let v = if at_lower && stat[i] < 0.0 {
            -stat[i]
        } else if at_upper && stat[i] > 0.0 {
            stat[i]
        } else if !at_lower && !at_upper {
            stat[i].abs()
        } else {
            0.0
        };
        worst = worst.max(v);
    }
    worst
}

/// Classify a vector against bounds (used to seed the QP working set).
fn classify(d: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> Vec<BoundState> {
    (0..d.len())
        .map(|i| {
            if lo[i].is_finite() && (d[i] - lo[i]).abs() < 1e-12 * (1.0 + d[i].abs()) {
                BoundState::AtLower
            } else if hi[i].is_finite() && (hi[i] - d[i]).abs() < 1e-12 * (1.0 + d[i].abs()) {
                BoundState::AtUpper
            } else {
                BoundState::Free
            }
        })
        .collect()
}

/// Per-stage dynamics blocks F_x, F_μ recovered from the defect Jacobian
/// (which stores their negatives).
struct StageBlocks {
    fx: Vec<nalgebra::Matrix6<f64>>,
    fu: Vec<nalgebra::Matrix6x3<f64>>,
}

fn extract_blocks(problem: &NlpProblem, jac: &DMatrix<f64>) -> StageBlocks {
    let n = problem.n_stages;
    let mut fx = vec![nalgebra::Matrix6::zeros(); n];
    let mut fu = vec![nalgebra::Matrix6x3::zeros(); n];
    for k in 0..n {
        let row = NX * k;
        let mu_col = problem.mu_offset(k);
        for i in 0..NX {
            for j in 0..NU {
                fu[k][(i, j)] = -jac[(row + i, mu_col + j)];
            }
        }
        if k > 0 {
            let x_col = problem.state_offset(k - 1);
            for i in 0..NX {
                for j in 0..NX {
                    fx[k][(i, j)] = -jac[(row + i, x_col + j)];
                }
            }
        }
    }
    StageBlocks { fx, fu }
}

/// Affine parametrization of the linearized-defect manifold, d = G·dμ + h.
struct Condensation {
    g_map: DMatrix<f64>,
    h_full: DVector<f64>,
    blocks: StageBlocks,
}

fn condense(problem: &NlpProblem, jac: &DMatrix<f64>, c: &DVector<f64>) -> Condensation {
    let n = problem.n_vars();
    let ns = problem.n_stages;
    let nu = NU * ns;
    let blocks = extract_blocks(problem, jac);

    let mut h_full = DVector::zeros(n);
    let mut hx = Vector6::zeros();
    for k in 0..ns {
        let mut next = if k > 0 { blocks.fx[k] * hx } else { Vector6::zeros() };
        for i in 0..NX {
            next[i] -= c[NX * k + i];
        }
        let o = problem.state_offset(k);
        for i in 0..NX {
            h_full[o + i] = next[i];
        }
        hx = next;
    }

    let mut g_map = DMatrix::zeros(n, nu);
    for k in 0..ns {
        let o = problem.mu_offset(k);
        for i in 0..NU {
            g_map[(o + i, NU * k + i)] = 1.0;
        }
    }
    let mut m_prev = DMatrix::zeros(NX, nu);
    for k in 0..ns {
        let mut m_next = if k > 0 {
            let fx = DMatrix::from_fn(NX, NX, |i, j| blocks.fx[k][(i, j)]);
            &fx * &m_prev
        } else {
            DMatrix::zeros(NX, nu)
        };
        for i in 0..NX {
            for j in 0..NU {
                m_next[(i, NU * k + j)] += blocks.fu[k][(i, j)];
            }
        }
        let o = problem.state_offset(k);
        for i in 0..NX {
            for col in 0..nu {
                g_map[(o + i, col)] = m_next[(i, col)];
            }
        }
        m_prev = m_next;
    }
    Condensation { g_map, h_full, blocks }
}

enum QpStep {
    /// Full-space step, defect multipliers, terminal-row multipliers.
    Step(DVector<f64>, DVector<f64>, [f64; 3]),
    TerminalInfeasible,
}

/// One condensed QP subproblem: bounds on dμ, terminal ball as three
/// two-sided rows. `term_lo`/`term_hi` are in d-space (bounds minus the
/// current iterate's terminal pose).
#[allow(clippy::too_many_arguments)]
fn solve_condensed_qp(
    problem: &NlpProblem,
    hessian: &DMatrix<f64>,
    grad: &DVector<f64>,
    cond: &Condensation,
    d_lo: &DVector<f64>,
    d_hi: &DVector<f64>,
    term_lo: &[f64; 3],
    term_hi: &[f64; 3],
) -> Result<QpStep, Error> {
    let ns = problem.n_stages;
    let nu = NU * ns;
    let term = problem.state_offset(ns - 1);

    // Reduced quadratic data.
    let bg = hessian * &cond.g_map;
    let h_red = cond.g_map.transpose() * &bg;
    let grad_red = cond.g_map.transpose() * (grad + hessian * &cond.h_full);

    let mut lo_red = DVector::zeros(nu);
    let mut hi_red = DVector::zeros(nu);
    for k in 0..ns {
        let o = problem.mu_offset(k);
        for i in 0..NU {
            lo_red[NU * k + i] = d_lo[o + i];
            hi_red[NU * k + i] = d_hi[o + i];
        }
    }

    // Terminal pose rows: (G dμ + h)_term ∈ [term_lo, term_hi].
    let mut rows = DMatrix::zeros(3, nu);
    let mut row_lo = DVector::zeros(3);
    let mut row_hi = DVector::zeros(3);
    for i in 0..3 {
        for col in 0..nu {
            rows[(i, col)] = cond.g_map[(term + i, col)];
        }
        row_lo[i] = term_lo[i] - cond.h_full[term + i];
        row_hi[i] = term_hi[i] - cond.h_full[term + i];
    }

    // Start point dμ = 0 is bound-feasible by construction; if it violates
    // the terminal rows, pull the terminal pose toward the row box first
    // (bounds-only feasibility QP). Failure to reach the box means the
    // terminal set is unreachable under the control bounds.
    let mut d0 = DVector::zeros(nu);
    let row_val = |d: &DVector<f64>| {
        let mut v = [0.0; 3];
        for i in 0..3 {
            for col in 0..nu {
                v[i] += rows[(i, col)] * d[col];
            }
        }
        v
    };
    let violated = |v: &[f64; 3]| {
        (0..3).any(|i| v[i] < row_lo[i] - 1e-9 || v[i] > row_hi[i] + 1e-9)
    };
    let mut row_state = vec![BoundState::Free; 3];
    let v0 = row_val(&d0);
    if violated(&v0) {
        let mut feas_h = DMatrix::from_diagonal_element(nu, nu, 1e-8);
        let mut feas_g = DVector::zeros(nu);
        for i in 0..3 {
            let target = 0.5 * (row_lo[i] + row_hi[i]);
            for a in 0..nu {
                for b in 0..nu {
                    feas_h[(a, b)] += 2.0 * rows[(i, a)] * rows[(i, b)];
                }
                feas_g[a] += -2.0 * target * rows[(i, a)];
            }
        }
        let empty_rows = DMatrix::zeros(0, nu);
        let empty = DVector::zeros(0);
        let feas_qp = QpData {
            hessian: &feas_h,
            gradient: &feas_g,
            eq_jacobian: &empty_rows,
            eq_rhs: &empty,
            lower: &lo_red,
            upper: &hi_red,
            rows: &empty_rows,
            row_lower: &empty,
            row_upper: &empty,
        };
        let start = classify(&d0, &lo_red, &hi_red);
        let feas = solve_box_qp(&feas_qp, d0, start, Vec::new())?;
        let v = row_val(&feas.d);
        if violated(&v) {
            return Ok(QpStep::TerminalInfeasible);
        }
        d0 = feas.d;
        // Rows met exactly at a side start active.
        for i in 0..3 {
            if (v[i] - row_lo[i]).abs() < 1e-9 {
                row_state[i] = BoundState::AtLower;
            } else if (v[i] - row_hi[i]).abs() < 1e-9 {
                row_state[i] = BoundState::AtUpper;
            }
        }
    }

    let empty_a = DMatrix::zeros(0, nu);
    let empty_b = DVector::zeros(0);
    let qp = QpData {
        hessian: &h_red,
        gradient: &grad_red,
        eq_jacobian: &empty_a,
        eq_rhs: &empty_b,
        lower: &lo_red,
        upper: &hi_red,
        rows: &rows,
        row_lower: &row_lo,
        row_upper: &row_hi,
    };
    let working = classify(&d0, &lo_red, &hi_red);
    let sol = solve_box_qp(&qp, d0, working, row_state)?;

    let p = &cond.g_map * &sol.d + &cond.h_full;

    // Defect multipliers by the backward adjoint over the state
    // stationarity rows; the terminal pose rows carry the ball multipliers.
    let stat = hessian * &p + grad;
    let mut lambda = DVector::zeros(NX * ns);
    let mut lam_next = Vector6::zeros();
    for k in (0..ns).rev() {
        let o = problem.state_offset(k);
        let mut lam = Vector6::zeros();
        for i in 0..NX {
            lam[i] = stat[o + i];
        }
        if k == ns - 1 {
            for i in 0..3 {
                lam[i] -= sol.row_multipliers[i];
            }
        }
        if k + 1 < ns {
            lam += cond.blocks.fx[k + 1].transpose() * lam_next;
        }
        for i in 0..NX {
            lambda[NX * k + i] = lam[i];
        }
        lam_next = lam;
    }
    let mut row_mults = [0.0; 3];
    for i in 0..3 {
        row_mults[i] = sol.row_multipliers[i];
    }
    Ok(QpStep::Step(p, lambda, row_mults))
}

fn sqp_attempt(
    problem: &NlpProblem,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    term_lo: &[f64; 3],
    term_hi: &[f64; 3],
    init: DVector<f64>,
    settings: &SqpSettings,
) -> Result<AttemptOutcome, Error> {
    let n = problem.n_vars();
    let mut z = init;
    // Keep the iterate inside the bounds at all times (states other than the
    // terminal pose are unbounded; the terminal ball is handled by the QP
    // rows, so z itself is only clamped on the controls).
    for i in 0..n {
        z[i] = z[i].clamp(lo[i], hi[i]);
    }

    // The objective is exactly quadratic, so its Hessian is the natural
    // constant curvature model; the leftover Lagrangian curvature from the
    // short-step dynamics is small enough that a fixed model converges in a
    // few iterations and cannot be corrupted by stalled steps.
    let hessian = {
        let mut h = problem.cost_hessian();
        for i in 0..n {
            h[(i, i)] += 1e-8;
        }
        h
    };

    // Bounds used for the KKT residual check: controls plus terminal ball.
    let term = problem.state_offset(problem.n_stages - 1);
    let mut lo_kkt = lo.clone();
    let mut hi_kkt = hi.clone();
    for i in 0..3 {
        lo_kkt[term + i] = term_lo[i];
        hi_kkt[term + i] = term_hi[i];
    }

    let mut lambda: Option<DVector<f64>> = None;
    let mut rho: f64 = 1.0;
    let mut iterations = 0;
    let mut kkt = f64::INFINITY;
    let mut feas;
    let mut suboptimal = false;
    // Trust region on the control step, adapted from the observed line
    // search: keeps the defect linearization honest when the sea gets
    // violent and Newton steps overshoot.
    let mut trust = 2.0 * problem.mu_bounds.amax();
    let trust_min = 0.05 * problem.mu_bounds.amin();
    let trust_max = trust;

    loop {
        let c = problem.defects(&z);
        if !c.iter().all(|v| v.is_finite()) {
            return Err(Error::SolverFault("non-finite defects at iterate".into()));
        }
        let jac = problem.defect_jacobian(&z);
        let grad = problem.cost_gradient(&z);
        feas = c.amax();

        if let Some(lam) = &lambda {
            kkt = kkt_residual(&grad, &jac, lam, &z, &lo_kkt, &hi_kkt);
            if kkt <= settings.kkt_tolerance && feas <= settings.feasibility_tolerance {
                break;
            }
        }

        if iterations >= settings.max_iterations {
            suboptimal = true;
            break;
        }

        let mut d_lo = lo - &z;
        let mut d_hi = hi - &z;
        for k in 0..problem.n_stages {
            let o = problem.mu_offset(k);
            for i in 0..NU {
                d_lo[o + i] = d_lo[o + i].max(-trust);
                d_hi[o + i] = d_hi[o + i].min(trust);
            }
        }
        let mut t_lo = [0.0; 3];
        let mut t_hi = [0.0; 3];
        for i in 0..3 {
            t_lo[i] = term_lo[i] - z[term + i];
            t_hi[i] = term_hi[i] - z[term + i];
        }
        let cond = condense(problem, &jac, &c);
        let (p, lam, _row_mults) = match solve_condensed_qp(
            problem, &hessian, &grad, &cond, &d_lo, &d_hi, &t_lo, &t_hi,
        )? {
            QpStep::Step(p, lam, rm) => (p, lam, rm),
            QpStep::TerminalInfeasible => {
                // The terminal box may only be out of reach of the shrunken
                // trust region; declare infeasibility only at full radius.
                if trust < trust_max {
                    trust = trust_max;
                    continue;
                }
                return Ok(AttemptOutcome::TerminalInfeasible);
            }
        };
        iterations += 1;
        lambda = Some(lam.clone());

        // ℓ1 merit line search.
        let lambda_inf = lam.amax();
        rho = rho.max(2.0 * lambda_inf + 1.0).min(1e7);
        let c1: f64 = c.iter().map(|v| v.abs()).sum();
        let f0 = problem.cost(&z);
        let merit0 = f0 + rho * c1;
        let descent = grad.dot(&p) - rho * c1;
        let z_old = z.clone();
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut z_try = &z_old + alpha * &p;
            for i in 0..n {
                z_try[i] = z_try[i].clamp(lo[i], hi[i]);
            }
            let c_try = problem.defects(&z_try);
            let f_try = problem.cost(&z_try);
            if c_try.iter().all(|v| v.is_finite()) && f_try.is_finite() {
                let merit_try = f_try + rho * c_try.iter().map(|v| v.abs()).sum::<f64>();
                if merit_try <= merit0 + 1e-4 * alpha * descent.min(0.0) {
                    z = z_try;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            if trust > trust_min {
                // Shrink the trust region and relinearize instead of giving
                // up at this iterate.
                trust = (trust * 0.25).max(trust_min);
                continue;
            }
            suboptimal = true;
            break;
        }
        if alpha >= 1.0 {
            trust = (trust * 1.7).min(trust_max);
        } else if alpha <= 0.25 {
            trust = (trust * 0.5).max(trust_min);
        }

        if p.amax() < 1e-14 {
            // Fixed point of the iteration.
            let c_now = problem.defects(&z);
            feas = c_now.amax();
            let grad_now = problem.cost_gradient(&z);
            let jac_now = problem.defect_jacobian(&z);
            kkt = kkt_residual(&grad_now, &jac_now, lambda.as_ref().unwrap(), &z, &lo_kkt, &hi_kkt);
            break;
        }
    }

    // Rollout restoration: states regenerated from the controls make the
    // returned sequence exactly defect-free, also on iteration-limited exits.
    let mut controls = Vec::with_capacity(problem.n_stages);
    for k in 0..problem.n_stages {
        let mut mu = problem.get_mu(&z, k);
        for i in 0..NU {
            mu[i] = mu[i].clamp(-problem.mu_bounds[i], problem.mu_bounds[i]);
        }
        controls.push(mu);
    }
    let states = problem.rollout(&controls);
    let z_restored = problem.pack(&controls, &states);
    let cost = problem.cost(&z_restored);

    Ok(AttemptOutcome::Solved(Box::new(ControlSolution {
        controls,
        states,
        cost,
        iterations,
        kkt_residual: kkt,
        constraint_violation: feas,
        solve_time_s: 0.0,
        suboptimal,
        terminal_relaxations: 0,
        horizon: problem.n_stages,
        horizon_truncated: false,
    })))
}

/// Solve the transcription. `warm` is the shifted previous solution; cold
/// starts replicate the previously applied control and roll the dynamics
/// forward. An infeasible terminal set is retried with the ball radius
/// doubled, up to three times, and flagged on the result.
pub fn solve_nlp(
    problem: &NlpProblem,
    warm: Option<&WarmStart>,
    settings: &SqpSettings,
) -> Result<ControlSolution, Error> {
    problem.validate()?;
    let start = Instant::now();

    let init_controls: Vec<Vector3<f64>> = match warm {
        Some(w) if w.controls.len() == problem.n_stages => w.controls.clone(),
        _ => {
            let mut mu = problem.mu_prev;
            for i in 0..NU {
                mu[i] = mu[i].clamp(-problem.mu_bounds[i], problem.mu_bounds[i]);
            }
            vec![mu; problem.n_stages]
        }
    };
    let init_states: Vec<Vector6<f64>> = match warm {
        Some(w) if w.states.len() == problem.n_stages => w.states.clone(),
        _ => problem.rollout(&init_controls),
    };
    let init = problem.pack(&init_controls, &init_states);

    // Variable bounds carry only the control box; the terminal ball lives in
    // the QP rows.
    let (mut lo, mut hi) = problem.bounds();
    let term = problem.state_offset(problem.n_stages - 1);
    for i in 0..3 {
        lo[term + i] = f64::NEG_INFINITY;
        hi[term + i] = f64::INFINITY;
    }

    let mut relaxations = 0u32;
    loop {
        let factor = (2.0_f64).powi(relaxations as i32);
        let mut term_lo = [0.0; 3];
        let mut term_hi = [0.0; 3];
        for i in 0..3 {
            let radius = problem.terminal_radius[i] * factor;
            term_lo[i] = problem.terminal_center[i] - radius;
            term_hi[i] = problem.terminal_center[i] + radius;
        }
        match sqp_attempt(problem, &lo, &hi, &term_lo, &term_hi, init.clone(), settings)? {
            AttemptOutcome::Solved(mut sol) => {
                // Warm-started attempt hit the iteration cap: retry cold and
                // keep whichever point is better.
                if sol.suboptimal && warm.is_some() {
                    let cold_controls = {
                        let mut mu = problem.mu_prev;
                        for i in 0..NU {
                            mu[i] = mu[i].clamp(-problem.mu_bounds[i], problem.mu_bounds[i]);
                        }
                        vec![mu; problem.n_stages]
                    };
                    let cold_states = problem.rollout(&cold_controls);
                    let cold_init = problem.pack(&cold_controls, &cold_states);
                    if let AttemptOutcome::Solved(cold) = sqp_attempt(
                        problem, &lo, &hi, &term_lo, &term_hi, cold_init, settings,
                    )? {
                        if cold.cost < sol.cost || (!cold.suboptimal && sol.suboptimal) {
                            let warm_iters = sol.iterations;
                            sol = cold;
                            sol.iterations += warm_iters;
                        }
                    }
                }
                sol.terminal_relaxations = relaxations;
                sol.solve_time_s = start.elapsed().as_secs_f64();
                return Ok(*sol);
            }
            AttemptOutcome::TerminalInfeasible => {
                relaxations += 1;
                if relaxations > 3 {
                    return Err(Error::SolverFault(
                        "terminal set infeasible after 3 radius relaxations".into(),
                    ));
                }
            }
        }
    }
}
