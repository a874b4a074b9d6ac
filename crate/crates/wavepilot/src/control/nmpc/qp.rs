//! Primal active-set solver for convex QPs with equality constraints,
//! variable bounds, and a few two-sided general inequality rows:
//!
//!     min ½ dᵀBd + gᵀd   s.t.  A d = b,   l ≤ d ≤ u,   rl ≤ R d ≤ ru
//!
//! The working set holds variables pinned at a bound and rows active at one
//! of their sides; each iteration solves the equality-constrained KKT system
//! on the free variables, steps to the nearest blocking bound or row, and
//! drops working-set members whose multipliers have the wrong sign. The
//! caller supplies a start point satisfying every constraint class.

use crate::error::Error;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundState {
    Free,
    AtLower,
    AtUpper,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub d: DVector<f64>,
    /// Multipliers of the equality constraints, in the convention
    /// B·d + g = Aᵀλ + Rᵀm + σ.
    pub eq_multipliers: DVector<f64>,
    /// Multipliers of the general rows (signed: ≤ 0 at the upper side,
    /// ≥ 0 at the lower side, 0 when inactive).
    pub row_multipliers: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub struct QpData<'a> {
    pub hessian: &'a DMatrix<f64>,
    pub gradient: &'a DVector<f64>,
    pub eq_jacobian: &'a DMatrix<f64>,
    pub eq_rhs: &'a DVector<f64>,
    pub lower: &'a DVector<f64>,
    pub upper: &'a DVector<f64>,
    /// General inequality rows (may be 0×n).
    pub rows: &'a DMatrix<f64>,
    pub row_lower: &'a DVector<f64>,
    pub row_upper: &'a DVector<f64>,
}

impl QpData<'_> {
    fn n(&self) -> usize {
        self.gradient.len()
    }
    fn m_eq(&self) -> usize {
        self.eq_rhs.len()
    }
    fn m_rows(&self) -> usize {
        self.row_lower.len()
    }
}

/// Solve the KKT system with pinned variables fixed at their bounds and the
/// active rows enforced as equalities. Returns the target point, equality
/// multipliers, and active-row multipliers (aligned with `row_state`).
fn kkt_solve(
    qp: &QpData,
    working: &[BoundState],
    row_state: &[BoundState],
    fixed_values: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let n = qp.n();
    let m = qp.m_eq();
    let free: Vec<usize> = (0..n).filter(|&i| working[i] == BoundState::Free).collect();
    let active_rows: Vec<usize> = (0..qp.m_rows())
        .filter(|&j| row_state[j] != BoundState::Free)
        .collect();
    let nf = free.len();
    let mr = active_rows.len();
    let dim = nf + m + mr;

    if dim == 0 {
        return Some((fixed_values.clone(), DVector::zeros(0), DVector::zeros(qp.m_rows())));
    }

    let mut kkt = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);

    for (fi, &i) in free.iter().enumerate() {
        for (fj, &j) in free.iter().enumerate() {
            kkt[(fi, fj)] = qp.hessian[(i, j)];
        }
        for r in 0..m {
            kkt[(fi, nf + r)] = -qp.eq_jacobian[(r, i)];
            kkt[(nf + r, fi)] = qp.eq_jacobian[(r, i)];
        }
        for (ri, &j) in active_rows.iter().enumerate() {
            kkt[(fi, nf + m + ri)] = -qp.rows[(j, i)];
            kkt[(nf + m + ri, fi)] = qp.rows[(j, i)];
        }
        let mut v = -qp.gradient[i];
        for (j, state) in working.iter().enumerate() {
            if *state != BoundState::Free {
                v -= qp.hessian[(i, j)] * fixed_values[j];
            }
        }
        rhs[fi] = v;
    }
    for r in 0..m {
        let mut v = qp.eq_rhs[r];
        for (j, state) in working.iter().enumerate() {
            if *state != BoundState::Free {
                v -= qp.eq_jacobian[(r, j)] * fixed_values[j];
            }
        }
        rhs[nf + r] = v;
    }
    for (ri, &j) in active_rows.iter().enumerate() {
        let target = match row_state[j] {
            BoundState::AtLower => qp.row_lower[j],
            BoundState::AtUpper => qp.row_upper[j],
            BoundState::Free => unreachable!(),
        };
        let mut v = target;
        for (col, state) in working.iter().enumerate() {
            if *state != BoundState::Free {
                v -= qp.rows[(j, col)] * fixed_values[col];
            }
        }
        rhs[nf + m + ri] = v;
    }

    // LU with a progressive primal/dual regularization fallback (degenerate
    // working sets can make the saddle system singular, e.g. active rows
    // with every variable pinned).
    let mut reg = 0.0;
    for _ in 0..5 {
        let mut sys = kkt.clone();
        if reg > 0.0 {
            for i in 0..nf {
                sys[(i, i)] += reg;
            }
            for i in nf..dim {
                sys[(i, i)] -= reg;
            }
        }
        if let Some(sol) = sys.lu().solve(&rhs) {
            if sol.iter().all(|v| v.is_finite()) {
                let mut target = fixed_values.clone();
                for (fi, &i) in free.iter().enumerate() {
                    target[i] = sol[fi];
                }
                let lambda = DVector::from_fn(m, |r, _| sol[nf + r]);
                let mut row_mult = DVector::zeros(qp.m_rows());
                for (ri, &j) in active_rows.iter().enumerate() {
                    row_mult[j] = sol[nf + m + ri];
                }
                return Some((target, lambda, row_mult));
            }
        }
        reg = if reg == 0.0 { 1e-10 } else { reg * 100.0 };
    }
    None
}

/// `d0` must satisfy the equalities, the bounds, and the rows; `working`
/// and `row_state` mark constraints of `d0` that start active.
pub fn solve_box_qp(
    qp: &QpData,
    mut d: DVector<f64>,
    mut working: Vec<BoundState>,
    mut row_state: Vec<BoundState>,
) -> Result<QpSolution, Error> {
    let n = qp.n();
    let m = qp.m_eq();
    let mr = qp.m_rows();
    debug_assert_eq!(working.len(), n);
    debug_assert_eq!(row_state.len(), mr);
    let max_iters = 3 * (n + m + mr) + 10;

    let mut lambda = DVector::zeros(m);
    let mut row_mult = DVector::zeros(mr);
    for iter in 0..max_iters {
        // Constraint values for the current working set.
        let mut fixed = d.clone();
        for i in 0..n {
            match working[i] {
                BoundState::AtLower => fixed[i] = qp.lower[i],
                BoundState::AtUpper => fixed[i] = qp.upper[i],
                BoundState::Free => {}
            }
        }
        let (target, lam, rm) = kkt_solve(qp, &working, &row_state, &fixed)
            .ok_or_else(|| Error::SolverFault("singular KKT system in QP".into()))?;
        lambda = lam;
        row_mult = rm;
        let direction = &target - &d;
        let dir_norm = direction.amax();

        if dir_norm < 1e-11 * d.amax().max(1.0) {
            // At the working-set minimizer: check multiplier signs.
            // Stationarity: B·d + g = Aᵀλ + Rᵀm + σ.
            let mut sigma = qp.hessian * &d + qp.gradient - qp.eq_jacobian.transpose() * &lambda;
            if mr > 0 {
                sigma -= qp.rows.transpose() * &row_mult;
            }
            // Worst violation across pinned bounds and active rows.
            let mut worst: Option<(bool, usize, f64)> = None;
            for i in 0..n {
                let violation = match working[i] {
                    BoundState::AtLower => -sigma[i],
                    BoundState::AtUpper => sigma[i],
                    BoundState::Free => continue,
                };
                if violation > 1e-9 && worst.map_or(true, |(_, _, w)| violation > w) {
                    worst = Some((false, i, violation));
                }
            }
            for j in 0..mr {
                let violation = match row_state[j] {
                    BoundState::AtLower => -row_mult[j],
                    BoundState::AtUpper => row_mult[j],
                    BoundState::Free => continue,
                };
                if violation > 1e-9 && worst.map_or(true, |(_, _, w)| violation > w) {
                    worst = Some((true, j, violation));
                }
            }
            match worst {
                None => {
                    return Ok(QpSolution {
                        d,
                        eq_multipliers: lambda,
                        row_multipliers: row_mult,
                        iterations: iter + 1,
                        converged: true,
                    });
                }
                Some((is_row, idx, _)) => {
                    if is_row {
                        row_state[idx] = BoundState::Free;
                    } else {
                        working[idx] = BoundState::Free;
                    }
                    continue;
                }
            }
        }

        // Step toward the target, stopping at the first blocking bound or
        // inactive row.
        let mut alpha = 1.0;
        let mut blocker: Option<(bool, usize, BoundState)> = None;
        for i in 0..n {
            if working[i] != BoundState::Free {
                continue;
            }
            let p = direction[i];
            if p > 1e-14 && qp.upper[i].is_finite() {
                let a = (qp.upper[i] - d[i]) / p;
                if a < alpha {
                    alpha = a.max(0.0);
                    blocker = Some((false, i, BoundState::AtUpper));
                }
            } else if p < -1e-14 && qp.lower[i].is_finite() {
                let a = (qp.lower[i] - d[i]) / p;
                if a < alpha {
                    alpha = a.max(0.0);
                    blocker = Some((false, i, BoundState::AtLower));
                }
            }
        }
        for j in 0..mr {
            if row_state[j] != BoundState::Free {
                continue;
            }
            let mut rv = 0.0;
            let mut rp = 0.0;
            for col in 0..n {
                rv += qp.rows[(j, col)] * d[col];
                rp += qp.rows[(j, col)] * direction[col];
            }
            if rp > 1e-14 && qp.row_upper[j].is_finite() {
                let a = (qp.row_upper[j] - rv) / rp;
                if a < alpha {
                    alpha = a.max(0.0);
                    blocker = Some((true, j, BoundState::AtUpper));
                }
            } else if rp < -1e-14 && qp.row_lower[j].is_finite() {
                let a = (qp.row_lower[j] - rv) / rp;
                if a < alpha {
                    alpha = a.max(0.0);
                    blocker = Some((true, j, BoundState::AtLower));
                }
            }
        }
        d += alpha * &direction;
        if let Some((is_row, idx, state)) = blocker {
            if is_row {
                row_state[idx] = state;
            } else {
                d[idx] = match state {
                    BoundState::AtLower => qp.lower[idx],
                    BoundState::AtUpper => qp.upper[idx],
                    BoundState::Free => unreachable!(),
                };
                working[idx] = state;
            }
        }
    }

    Ok(QpSolution {
        d,
        eq_multipliers: lambda,
        row_multipliers: row_mult,
        iterations: max_iters,
        converged: false,
    })
}
