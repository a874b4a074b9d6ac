//! Batch experiment matrix: every wave case against every controller, run
//! in parallel (cells share nothing mutable), with per-cell metrics and the
//! pairwise RMSE reductions between the controllers.

use super::config::{ScenarioConfig, WaveCase};
use super::csvio;
use super::metrics::{compute_metrics, MetricsReport};
use super::mission::run_mission;
use crate::control::ControllerKind;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub case_label: String,
    pub controller: String,
    pub metrics: Option<MetricsReport>,
    pub failure: Option<String>,
    pub rows: usize,
    pub mean_solve_time_ms: f64,
    pub max_solve_time_ms: f64,
}

/// Per-case percentage reductions (RMSE_a − RMSE_b)/RMSE_a per DoF.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionRow {
    pub case_label: String,
    pub comparison: String,
    pub surge: f64,
    pub heave: f64,
    pub pitch: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixSummary {
    pub cells: Vec<CellResult>,
    pub reductions: Vec<ReductionRow>,
    pub wall_time_s: f64,
}

impl MatrixSummary {
    pub fn metrics_for(
        &self,
        case: WaveCase,
        controller: ControllerKind,
    ) -> Option<&MetricsReport> {
        self.cells
            .iter()
            .find(|c| c.case_label == case.label() && c.controller == controller.label())
            .and_then(|c| c.metrics.as_ref())
    }

    pub fn reduction_for(&self, case: WaveCase, comparison: &str) -> Option<&ReductionRow> {
        self.reductions
            .iter()
            .find(|r| r.case_label == case.label() && r.comparison == comparison)
    }
}

fn reduction(a: &MetricsReport, b: &MetricsReport) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = if a.rmse[i] > 0.0 {
            (a.rmse[i] - b.rmse[i]) / a.rmse[i]
        } else {
            0.0
        };
    }
    out
}

fn run_cell(
    base: &ScenarioConfig,
    case: WaveCase,
    controller: ControllerKind,
    out_dir: Option<&Path>,
) -> CellResult {
    let mut cfg = base.clone();
    cfg.apply_case(case);
    cfg.controller = controller;
    let outcome = match run_mission(&cfg) {
        Ok(o) => o,
        Err(e) => {
            return CellResult {
                case_label: case.label().into(),
                controller: controller.label().into(),
                metrics: None,
                failure: Some(e.to_string()),
                rows: 0,
                mean_solve_time_ms: 0.0,
                max_solve_time_ms: 0.0,
            }
        }
    };
    let solve_times: Vec<f64> = outcome
        .log
        .rows
        .iter()
        .filter(|r| r.solve_time_s > 0.0)
        .map(|r| r.solve_time_s * 1e3)
        .collect();
    let mean_solve = if solve_times.is_empty() {
        0.0
    } else {
        solve_times.iter().sum::<f64>() / solve_times.len() as f64
    };
    let max_solve = solve_times.iter().fold(0.0_f64, |a, &b| a.max(b));
    if let Some(dir) = out_dir {
        let path: PathBuf = dir.join(format!("{}_{}.csv", case.label(), controller.label()));
        if let Err(e) = csvio::write_mission_csv(&outcome.log, &path) {
            eprintln!("warning: failed to write {}: {e}", path.display());
        }
    }
    let metrics = outcome.succeeded().then(|| compute_metrics(&outcome.log));
    CellResult {
        case_label: case.label().into(),
        controller: controller.label().into(),
        metrics,
        failure: outcome.failure,
        rows: outcome.log.rows.len(),
        mean_solve_time_ms: mean_solve,
        max_solve_time_ms: max_solve,
    }
}

/// Run {W1, W2, W3} × {C-PD, FF, NMPC}. Cells run concurrently; per-cell
/// failures are recorded and the rest of the matrix continues.
pub fn run_matrix(base: &ScenarioConfig, out_dir: Option<&Path>) -> MatrixSummary {
    let start = Instant::now();
    let pairs: Vec<(WaveCase, ControllerKind)> = WaveCase::MATRIX
        .iter()
        .flat_map(|&c| ControllerKind::ALL.iter().map(move |&k| (c, k)))
        .collect();

    let mut cells: Vec<Option<CellResult>> = (0..pairs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (slot, &(case, controller)) in pairs.iter().enumerate() {
            let base_ref = &*base;
            handles.push((
                slot,
                scope.spawn(move || run_cell(base_ref, case, controller, out_dir)),
            ));
        }
        for (slot, handle) in handles {
            cells[slot] = Some(handle.join().expect("matrix cell thread panicked"));
        }
    });
    let cells: Vec<CellResult> = cells.into_iter().map(|c| c.unwrap()).collect();

    let mut reductions = Vec::new();
    for case in WaveCase::MATRIX {
        let get = |ctrl: ControllerKind| {
            cells
                .iter()
                .find(|c| c.case_label == case.label() && c.controller == ctrl.label())
                .and_then(|c| c.metrics.as_ref())
        };
        if let (Some(cpd), Some(ff), Some(nmpc)) = (
            get(ControllerKind::CascadedPd),
            get(ControllerKind::FeedForward),
            get(ControllerKind::Nmpc),
        ) {
            let ff_nmpc = reduction(ff, nmpc);
            reductions.push(ReductionRow {
                case_label: case.label().into(),
                comparison: "ff_vs_nmpc".into(),
                surge: ff_nmpc[0],
                heave: ff_nmpc[1],
                pitch: ff_nmpc[2],
            });
            let cpd_ff = reduction(cpd, ff);
            reductions.push(ReductionRow {
                case_label: case.label().into(),
                comparison: "cpd_vs_ff".into(),
                surge: cpd_ff[0],
                heave: cpd_ff[1],
                pitch: cpd_ff[2],
            });
        }
    }

    MatrixSummary {
        cells,
        reductions,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Plain-text table for the terminal.
pub fn format_summary(summary: &MatrixSummary) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:<5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>9}",
        "case", "ctrl", "rmse_x", "rmse_z", "rmse_th", "max_x", "max_z", "power_W"
    );
    for c in &summary.cells {
        match (&c.metrics, &c.failure) {
            (Some(m), _) => {
                let _ = writeln!(
                    out,
                    "{:<6} {:<5} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>9.3}",
                    c.case_label,
                    c.controller,
                    m.rmse[0],
                    m.rmse[1],
                    m.rmse[2],
                    m.max_error[0],
                    m.max_error[1],
                    m.mean_power_mech
                );
            }
            (None, Some(f)) => {
                let _ = writeln!(out, "{:<6} {:<5} FAILED: {f}", c.case_label, c.controller);
            }
            (None, None) => {}
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<6} {:<12} {:>8} {:>8} {:>8}",
        "case", "reduction", "surge", "heave", "pitch"
    );
    for r in &summary.reductions {
        let _ = writeln!(
            out,
            "{:<6} {:<12} {:>7.1}% {:>7.1}% {:>7.1}%",
            r.case_label,
            r.comparison,
            100.0 * r.surge,
            100.0 * r.heave,
            100.0 * r.pitch
        );
    }
    let _ = writeln!(out, "\nmatrix wall time: {:.1} s", summary.wall_time_s);
    out
}
