//! Acceptance suite: every release criterion as one test, each printing a
//! pass/fail verdict. The full case × controller study runs once and is
//! shared across criteria.

use std::collections::HashMap;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::Vector3;
use wavepilot::control::{ControllerKind, StageDynamics, VehicleStageDynamics};
use wavepilot::dswp::{estimate_spectrum, DswpConfig, ElevationRecord, WavePredictor};
use wavepilot::harness::{
    compute_metrics, mission_csv, run_mission, MetricsReport, MissionOutcome, ScenarioConfig,
    WaveCase,
};
use wavepilot::vehicle::{
    actuator_limits, coriolis_matrix, mass_matrix, wave_load, GeneralizedForce, VehicleModel,
    VehicleParams, VehicleState,
};
use wavepilot::wave::{
    dispersion_residual, solve_dispersion, synthesize_sea, SeaState, SpectrumShape, SpectrumSpec,
    WaveComponent,
};

const G: f64 = 9.81;
const DEPTH: f64 = 54.0;

struct Cell {
    outcome: MissionOutcome,
    metrics: MetricsReport,
}

struct Study {
    cells: HashMap<(String, String), Cell>,
    matrix_wall_s: f64,
}

impl Study {
    fn cell(&self, case: WaveCase, ctrl: ControllerKind) -> &Cell {
        &self.cells[&(case.label().to_string(), ctrl.label().to_string())]
    }
}

static STUDY: OnceLock<Study> = OnceLock::new();

fn study() -> &'static Study {
    STUDY.get_or_init(|| {
        let start = Instant::now();
        let mut cells = HashMap::new();
        for case in WaveCase::MATRIX {
            for ctrl in ControllerKind::ALL {
                let mut cfg = ScenarioConfig::for_case(case, ctrl);
                cfg.options.record_solutions = ctrl == ControllerKind::Nmpc;
                let outcome = run_mission(&cfg).expect("mission setup failed");
                assert!(
                    outcome.succeeded(),
                    "{} {} aborted: {:?}",
                    case.label(),
                    ctrl.label(),
                    outcome.failure
                );
                let metrics = compute_metrics(&outcome.log);
                cells.insert(
                    (case.label().to_string(), ctrl.label().to_string()),
                    Cell { outcome, metrics },
                );
            }
        }
        Study {
            cells,
            matrix_wall_s: start.elapsed().as_secs_f64(),
        }
    })
}

fn verdict(name: &str, ok: bool, detail: &str) -> bool {
    println!("{} criterion {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

#[test]
fn criterion_01_controller_ordering_and_runtime() {
    let s = study();
    let mut ok = true;
    let mut detail = String::new();
    for case in WaveCase::MATRIX {
        let cpd = s.cell(case, ControllerKind::CascadedPd).metrics;
        let ff = s.cell(case, ControllerKind::FeedForward).metrics;
        let nm = s.cell(case, ControllerKind::Nmpc).metrics;
        for dof in [0usize, 1] {
            ok &= nm.rmse[dof] < ff.rmse[dof] && ff.rmse[dof] < cpd.rmse[dof];
        }
        let red = |a: f64, b: f64| (a - b) / a;
        let surge = red(ff.rmse[0], nm.rmse[0]);
        let heave = red(ff.rmse[1], nm.rmse[1]);
        let pitch = red(ff.rmse[2], nm.rmse[2]);
        ok &= surge >= 0.20 && heave >= 0.20 && pitch >= 0.15;
        detail.push_str(&format!(
            "[{}: surge {:.1}%, heave {:.1}%, pitch {:.1}%] ",
            case.label(),
            100.0 * surge,
            100.0 * heave,
            100.0 * pitch
        ));
    }
    let runtime_ok = s.matrix_wall_s <= 1800.0;
    ok &= runtime_ok;
    detail.push_str(&format!("matrix wall {:.0} s", s.matrix_wall_s));
    assert!(
        verdict("1 (controller ordering + reductions + runtime)", ok, &detail),
        "{detail}"
    );
}

#[test]
fn criterion_02_power_ordering_mechanical_proxy() {
    // The ground-frame mechanical proxy Σ|μ_i·ν_i| is required to order
    // NMPC ≥ FF ≥ C-PD. Measured behaviour is the opposite: the preview
    // controller tracks best precisely by suppressing ν and by not fighting
    // unresistible load peaks, so it registers the least power under every
    // logged proxy. The assertion is kept as specified and the full
    // measurement table is printed for the record.
    let s = study();
    let mut ok = true;
    let mut detail = String::from("mean power per case (mech | propulsive | electrical):\n");
    for case in WaveCase::MATRIX {
        let cpd = s.cell(case, ControllerKind::CascadedPd).metrics;
        let ff = s.cell(case, ControllerKind::FeedForward).metrics;
        let nm = s.cell(case, ControllerKind::Nmpc).metrics;
        ok &= nm.mean_power_mech >= ff.mean_power_mech
            && ff.mean_power_mech >= cpd.mean_power_mech;
        detail.push_str(&format!(
            "  {}: nmpc {:7.2} | {:7.2} | {:6.2}   ff {:7.2} | {:7.2} | {:6.2}   cpd {:7.2} | {:7.2} | {:6.2}\n",
            case.label(),
            nm.mean_power_mech, nm.mean_power_prop, nm.mean_power_elec,
            ff.mean_power_mech, ff.mean_power_prop, ff.mean_power_elec,
            cpd.mean_power_mech, cpd.mean_power_prop, cpd.mean_power_elec,
        ));
    }
    assert!(verdict("2 (power ordering, mechanical proxy)", ok, &detail), "{detail}");
}

/// W1-scale linear deep-water sea with component frequencies snapped to the
/// 300 s record's frequency grid (leakage-free spatial propagation).
fn snapped_linear_sea() -> SeaState {
    let spec = SpectrumSpec {
        significant_wave_height: 2.78,
        peak_period: 7.1,
        component_count: 64,
        rng_seed: 42,
        shape: SpectrumShape::Jonswap,
    };
    let raw = synthesize_sea(&spec, DEPTH, G).unwrap();
    let grid = 2.0 * std::f64::consts::PI / 300.0;
    let comps: Vec<WaveComponent> = raw
        .components
        .iter()
        .map(|c| {
            let snapped = (c.angular_frequency / grid).round().max(1.0) * grid;
            WaveComponent::deep_water(c.height, snapped, c.phase, G).unwrap()
        })
        .collect();
    SeaState::new(comps, DEPTH, G).unwrap().linear()
}

#[test]
fn criterion_03_dswp_fidelity() {
    let sea = snapped_linear_sea();
    let hs = sea.significant_wave_height();
    let mut cfg = DswpConfig {
        second_order: false,
        ..Default::default()
    };
    cfg.band = WaveCase::W1.dswp_band(cfg.sample_interval);
    let mut predictor = WavePredictor::new(cfg, DEPTH, G).unwrap();
    for j in 0..3000 {
        let t = j as f64 * 0.1;
        predictor.record(sea.elevation(0.0, t), t).unwrap();
    }
    predictor.refresh_if_due(300.0).unwrap();

    let x_p = 50.0;
    let region = predictor.predictable_region(x_p).unwrap().unwrap();

    // Elevation RMSE across the predictable region.
    let mut sq = 0.0;
    let mut n = 0usize;
    let mut t = region.t_s;
    while t <= region.t_f {
        let (pred, in_region) = predictor.predict_elevation(x_p, t).unwrap();
        assert!(in_region);
        let err = pred - sea.elevation(x_p, t);
        sq += err * err;
        n += 1;
        t += 0.5;
    }
    let rmse = (sq / n as f64).sqrt();
    let rmse_ok = rmse <= 0.05 * hs;

    // Load-preview correlation against the truth loads at a fixed pose,
    // over the region's tail including the genuine forecast window.
    let params = VehicleParams::default();
    let t0 = 250.0;
    let preview = predictor
        .preview(x_p, -5.0, 0.0, None, t0, 0.1, 600, &params)
        .unwrap();
    assert!(preview.truncated);
    let mut pred = [Vec::new(), Vec::new(), Vec::new()];
    let mut truth = [Vec::new(), Vec::new(), Vec::new()];
    for (k, load) in preview.loads.iter().enumerate() {
        let t = t0 + k as f64 * 0.1;
        let tl = wave_load(&params, x_p, -5.0, 0.0, None, &|x, z| {
            sea.particle_kinematics(x, z.clamp(-DEPTH, 0.0), t)
        })
        .unwrap();
        for (i, (p, q)) in [
            (load.surge, tl.surge),
            (load.heave, tl.heave),
            (load.pitch, tl.pitch),
        ]
        .iter()
        .enumerate()
        {
            pred[i].push(*p);
            truth[i].push(*q);
        }
    }
    let corr = |a: &[f64], b: &[f64]| {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        cov / (va * vb).sqrt()
    };
    let correlations: Vec<f64> = (0..3).map(|i| corr(&pred[i], &truth[i])).collect();
    let corr_ok = correlations.iter().all(|c| *c >= 0.95);

    let detail = format!(
        "elevation RMSE {:.4} m = {:.2}% of Hs {:.2}; load correlations {:.4}/{:.4}/{:.4}",
        rmse,
        100.0 * rmse / hs,
        hs,
        correlations[0],
        correlations[1],
        correlations[2]
    );
    assert!(verdict("3 (wave-prediction fidelity)", rmse_ok && corr_ok, &detail), "{detail}");
}

#[test]
fn criterion_04_round_trip_identity() {
    // Thresholds disabled, linear sea (off-grid frequencies): spectrum
    // estimation followed by re-synthesis at the measuring point is a DFT
    // identity on the record samples.
    let spec = SpectrumSpec {
        significant_wave_height: 2.78,
        peak_period: 7.1,
        component_count: 96,
        rng_seed: 9,
        shape: SpectrumShape::Jonswap,
    };
    let sea = synthesize_sea(&spec, DEPTH, G).unwrap().linear();
    let dt = 0.1;
    let record = ElevationRecord {
        samples: (0..3000).map(|j| sea.elevation(0.0, j as f64 * dt)).collect(),
        dt,
        t_start: 0.0,
    };
    let spectrum =
        estimate_spectrum(&record, 0.0, (0.0, std::f64::consts::PI / dt), G).unwrap();
    let mut worst = 0.0_f64;
    for (j, s) in record.samples.iter().enumerate() {
        let (z, _) = spectrum.predict_elevation(0.0, j as f64 * dt, false);
        worst = worst.max((z - s).abs());
    }
    let ok = worst < 1e-8;
    assert!(
        verdict("4 (round-trip identity)", ok, &format!("max reconstruction error {worst:.2e}")),
        "worst {worst}"
    );
}

#[test]
fn criterion_05_predictable_region_algebra() {
    use wavepilot::dswp::{ReconstructedSpectrum, SpectralComponent};
    let mk = |c: f64| SpectralComponent {
        amplitude: 1.0,
        phase: 0.0,
        angular_frequency: G / c,
        wavenumber: (G / c) * (G / c) / G,
    };
    let spectrum = ReconstructedSpectrum {
        components: vec![mk(10.0), mk(5.0)],
        dc_offset: 0.0,
        t_ref: 0.0,
        record_duration: 300.0,
        amp_floor: 0.0,
        band: (0.0, 10.0),
        gravity: G,
    };
    let region = spectrum.predictable_region(50.0).unwrap();
    let ok = (region.t_s - 10.0).abs() < 1e-12 && (region.t_f - 305.0).abs() < 1e-12;
    assert!(
        verdict(
            "5 (region algebra)",
            ok,
            &format!("t_s = {:.12} s, t_f = {:.12} s", region.t_s, region.t_f)
        ),
        "{region:?}"
    );
}

#[test]
fn criterion_06_integration_order_and_equilibrium() {
    let model = VehicleModel::new(VehicleParams::default()).unwrap();
    let x0 = VehicleState::new(0.0, -5.0, 0.1, 0.4, -0.2, 0.1);
    let mu = GeneralizedForce::new(5.0, -4.0, 0.3);
    let run = |dt: f64| {
        let mut s = x0;
        let steps = (1.0 / dt).round() as usize;
        for k in 0..steps {
            s = model
                .rk4_step(&s, k as f64 * dt, dt, &|_| mu, &|_, _| GeneralizedForce::ZERO)
                .unwrap();
        }
        s.as_vector6()
    };
    let reference = run(1e-4);
    let factor = (run(0.02) - reference).norm() / (run(0.01) - reference).norm();
    let order = factor.log2();

    let mut state = VehicleState::at_rest(50.0, -8.0, 0.0);
    let hover = GeneralizedForce::new(0.0, -2.0, 0.0);
    for _ in 0..100 {
        state = model
            .rk4_step_held(&state, 0.1, hover, GeneralizedForce::ZERO)
            .unwrap();
    }
    let drift = ((state.x() - 50.0).powi(2) + (state.z() + 8.0).powi(2)).sqrt()
        + state.theta().abs();
    let ok = order >= 3.5 && drift < 1e-6;
    assert!(
        verdict(
            "6 (integrator order + force balance)",
            ok,
            &format!("observed order {order:.2}, 10 s hover drift {drift:.2e} m")
        ),
        "order {order}, drift {drift}"
    );
}

#[test]
fn criterion_07_dynamics_algebra() {
    use rand::{Rng, SeedableRng};
    let p = VehicleParams::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let mut worst_skew = 0.0_f64;
    for _ in 0..100 {
        let nu = Vector3::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let c = coriolis_matrix(&p, &nu);
        worst_skew = worst_skew.max((c + c.transpose()).amax());
    }
    let spd = mass_matrix(&p).cholesky().is_some();
    let mut worst_residual = 0.0_f64;
    for &d in &[5.0, 54.0, 500.0] {
        let mut w = 0.1;
        while w <= 5.0 {
            let k = solve_dispersion(w, d, G).unwrap();
            worst_residual = worst_residual.max(dispersion_residual(w, k, d, G));
            w += 0.05;
        }
    }
    let ok = worst_skew < 1e-12 && spd && worst_residual < 1e-9;
    assert!(
        verdict(
            "7 (dynamics algebra)",
            ok,
            &format!(
                "skew {worst_skew:.2e}, inertia SPD {spd}, dispersion residual {worst_residual:.2e}"
            )
        ),
        "skew {worst_skew}, spd {spd}, residual {worst_residual}"
    );
}

#[test]
fn criterion_08_nmpc_feasibility_and_bounds() {
    let s = study();
    let model = VehicleModel::new(VehicleParams::default()).unwrap();
    let mut worst_defect = 0.0_f64;
    let mut solves = 0usize;
    for case in WaveCase::MATRIX {
        let cell = s.cell(case, ControllerKind::Nmpc);
        assert!(!cell.outcome.solutions.is_empty());
        for rec in &cell.outcome.solutions {
            let dynamics = VehicleStageDynamics {
                model: &model,
                dt: 0.1,
                loads: &rec.preview_loads,
            };
            let mut x = rec.x0.as_vector6();
            for (k, mu) in rec.controls.iter().enumerate() {
                x = dynamics.step(k, &x, mu);
                worst_defect = worst_defect.max((x - rec.states[k]).amax());
            }
            solves += 1;
        }
    }
    // Applied controls across every cell and controller stay in the box
    // (4·T·cos α = 98.99 N on surge and heave).
    let surge_heave_bound = actuator_limits(&VehicleParams::default()).surge;
    assert!((surge_heave_bound - 98.99).abs() < 0.01);
    let mut worst_control = 0.0_f64;
    for case in WaveCase::MATRIX {
        for ctrl in ControllerKind::ALL {
            for row in &s.cell(case, ctrl).outcome.log.rows {
                worst_control = worst_control
                    .max(row.applied.surge.abs())
                    .max(row.applied.heave.abs());
            }
        }
    }
    let ok = worst_defect < 1e-6 && worst_control <= surge_heave_bound + 1e-9;
    assert!(
        verdict(
            "8 (solution feasibility + actuator box)",
            ok,
            &format!(
                "worst re-simulation defect {worst_defect:.2e} over {solves} solves; \
                 largest |surge/heave control| {worst_control:.4} N vs bound {surge_heave_bound}"
            )
        ),
        "defect {worst_defect}, control {worst_control}"
    );
}

#[test]
fn criterion_09_ekf_health() {
    // Covariance stays PSD across the full second-case mission.
    let s = study();
    let mut min_eig = f64::INFINITY;
    for ctrl in ControllerKind::ALL {
        for row in &s.cell(WaveCase::W2, ctrl).outcome.log.rows {
            min_eig = min_eig.min(row.covariance_min_eig);
        }
    }
    let psd_ok = min_eig > -1e-9;

    // Zero-noise configuration: estimator tracks the truth to numerics.
    let mut cfg = ScenarioConfig::for_case(WaveCase::W2, ControllerKind::Nmpc);
    cfg.options.zero_noise_validation = true;
    let outcome = run_mission(&cfg).unwrap();
    assert!(outcome.succeeded(), "{:?}", outcome.failure);
    let mut worst_track = 0.0_f64;
    for row in &outcome.log.rows {
        let err = (row.truth.as_vector6() - row.estimate.as_vector6()).amax();
        worst_track = worst_track.max(err);
    }
    let track_ok = worst_track < 1e-6;
    let ok = psd_ok && track_ok;
    assert!(
        verdict(
            "9 (estimator health)",
            ok,
            &format!(
                "min covariance eigenvalue {min_eig:.2e}; zero-noise tracking error {worst_track:.2e}"
            )
        ),
        "min eig {min_eig}, track {worst_track}"
    );
}

#[test]
fn criterion_10_determinism() {
    let s = study();
    let first = mission_csv(&s.cell(WaveCase::W1, ControllerKind::CascadedPd).outcome.log);
    let mut cfg = ScenarioConfig::for_case(WaveCase::W1, ControllerKind::CascadedPd);
    cfg.options.record_solutions = false;
    let rerun = run_mission(&cfg).unwrap();
    assert!(rerun.succeeded());
    let second = mission_csv(&rerun.log);
    let ok = first == second;
    assert!(
        verdict(
            "10 (seeded determinism)",
            ok,
            &format!("re-run CSV identical: {} ({} bytes)", ok, first.len())
        ),
        "byte mismatch"
    );
}
