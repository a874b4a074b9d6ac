//! Tracking and power metrics over the tracking phase of a mission log.

use super::mission::MissionLog;
use crate::vehicle::wrap_angle;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Per-DoF RMSE (x m, z m, θ rad) against the reference.
    pub rmse: [f64; 3],
    /// Per-DoF maximum absolute error.
    pub max_error: [f64; 3],
    /// √(RMSE_x² + RMSE_z²).
    pub rmse_position: f64,
    /// Mean of the ground-frame mechanical proxy Σ|μ_i·ν_i| (W).
    pub mean_power_mech: f64,
    /// Mean propulsive mechanical power Σ|μ_i·(ν_i − ν_p,i)| (W).
    pub mean_power_prop: f64,
    /// Mean of the |μ|^(3/2) electrical proxy (W).
    pub mean_power_elec: f64,
    /// Integral of the mechanical proxy (J).
    pub energy_mech: f64,
    /// Mean power divided by the normalized RMSE 1/RMSE_pos, i.e.
    /// mean_power · RMSE_pos.
    pub power_rmse_product: f64,
    /// The other reading of the same ratio: mean_power / RMSE_pos.
    pub power_over_rmse: f64,
    /// Tracking-phase rows the metrics were computed over.
    pub rows: usize,
}

pub fn compute_metrics(log: &MissionLog) -> MetricsReport {
    let mut sq = [0.0; 3];
    let mut max_err = [0.0_f64; 3];
    let mut power_mech_sum = 0.0;
    let mut power_prop_sum = 0.0;
    let mut power_elec_sum = 0.0;
    let mut n = 0usize;
    for row in log.phase2_rows() {
        let e = [
            row.truth.x() - row.reference[0],
            row.truth.z() - row.reference[1],
            wrap_angle(row.truth.theta() - row.reference[2]),
        ];
        for i in 0..3 {
            sq[i] += e[i] * e[i];
            max_err[i] = max_err[i].max(e[i].abs());
        }
        power_mech_sum += row.power_mech;
        power_prop_sum += row.power_prop;
        power_elec_sum += row.power_elec;
        n += 1;
    }
    let rows = n.max(1);
    let rmse = [
        (sq[0] / rows as f64).sqrt(),
        (sq[1] / rows as f64).sqrt(),
        (sq[2] / rows as f64).sqrt(),
    ];
    let rmse_position = (rmse[0] * rmse[0] + rmse[1] * rmse[1]).sqrt();
    let mean_power_mech = power_mech_sum / rows as f64;
    let mean_power_prop = power_prop_sum / rows as f64;
    let mean_power_elec = power_elec_sum / rows as f64;
    MetricsReport {
        rmse,
        max_error: max_err,
        rmse_position,
        mean_power_mech,
        mean_power_prop,
        mean_power_elec,
        energy_mech: power_mech_sum * log.dt,
        power_rmse_product: mean_power_mech * rmse_position,
        power_over_rmse: if rmse_position > 0.0 {
            mean_power_mech / rmse_position
        } else {
            0.0
        },
        rows: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControllerKind;
    use crate::harness::mission::LogRow;
    use crate::vehicle::{GeneralizedForce, VehicleState};
    use approx::assert_relative_eq;
    use nalgebra::Vector6;

    fn make_log(rows: Vec<LogRow>) -> MissionLog {
        MissionLog {
            rows,
            dt: 0.1,
            record_duration: 0.0,
            case_label: "test".into(),
            controller: ControllerKind::CascadedPd,
        }
    }

    fn row(t: f64, x_err: f64, mu: GeneralizedForce, u: f64) -> LogRow {
        LogRow {
            t,
            phase: 2,
            truth: VehicleState::new(x_err, -8.0, 0.0, u, 0.0, 0.0),
            estimate: VehicleState::at_rest(0.0, -8.0, 0.0),
            reference: Vector6::new(0.0, -8.0, 0.0, 0.0, 0.0, 0.0),
            applied: mu,
            true_load: GeneralizedForce::ZERO,
            predicted_load: GeneralizedForce::ZERO,
            power_mech: (mu.surge * u).abs(),
            power_prop: (mu.surge * u).abs(),
            power_elec: 0.0,
            covariance_diag: [0.0; 6],
            covariance_min_eig: 0.0,
            solver_iterations: 0,
            solver_kkt: 0.0,
            solve_time_s: 0.0,
            preview_len: 0,
        }
    }

    #[test]
    fn constant_error_rmse_equals_max() {
        let rows = (0..10)
            .map(|k| row(k as f64 * 0.1, 0.5, GeneralizedForce::ZERO, 0.0))
            .collect();
        let m = compute_metrics(&make_log(rows));
        assert_relative_eq!(m.rmse[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(m.max_error[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_control_means_zero_power() {
        let rows = (0..10)
            .map(|k| row(k as f64 * 0.1, 0.1, GeneralizedForce::ZERO, 1.0))
            .collect();
        let m = compute_metrics(&make_log(rows));
        assert_eq!(m.mean_power_mech, 0.0);
        assert_eq!(m.energy_mech, 0.0);
    }

    #[test]
    fn rmse_le_max_error_per_dof() {
        let rows = (0..25)
            .map(|k| {
                row(
                    k as f64 * 0.1,
                    (k as f64 * 0.7).sin(),
                    GeneralizedForce::new(1.0, 0.0, 0.0),
                    0.3,
                )
            })
            .collect();
        let m = compute_metrics(&make_log(rows));
        for i in 0..3 {
            assert!(m.rmse[i] <= m.max_error[i] + 1e-15);
        }
    }

    #[test]
    fn matches_naive_recomputation_on_small_log() {
        let rows: Vec<LogRow> = (0..10)
            .map(|k| {
                row(
                    k as f64 * 0.1,
                    0.1 * k as f64,
                    GeneralizedForce::new(2.0, 0.0, 0.0),
                    0.5,
                )
            })
            .collect();
        let log = make_log(rows.clone());
        let m = compute_metrics(&log);
        // Naive spreadsheet-style recomputation.
        let n = rows.len() as f64;
        let mean_sq: f64 = rows
            .iter()
            .map(|r| {
                let e = r.truth.x() - r.reference[0];
                e * e
            })
            .sum::<f64>()
            / n;
        assert_relative_eq!(m.rmse[0], mean_sq.sqrt(), epsilon = 1e-12);
        let mean_p: f64 = rows.iter().map(|r| r.power_mech).sum::<f64>() / n;
        assert_relative_eq!(m.mean_power_mech, mean_p, epsilon = 1e-12);
        assert_relative_eq!(
            m.power_rmse_product,
            mean_p * (m.rmse[0] * m.rmse[0] + m.rmse[1] * m.rmse[1]).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn metrics_are_pure_and_repeatable() {
        let rows: Vec<LogRow> = (0..10)
            .map(|k| row(k as f64 * 0.1, 0.2, GeneralizedForce::new(1.0, 0.0, 0.0), 0.1))
            .collect();
        let log = make_log(rows);
        let a = compute_metrics(&log);
        let b = compute_metrics(&log);
        assert_eq!(a, b);
    }
}
