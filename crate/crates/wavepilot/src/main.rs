//! Batch CLI: single-cell runs, the full experiment matrix, predictor
//! diagnostics, and the invariant suite.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wavepilot::error::Error;
use wavepilot::harness::{
    self, parse_controller, ScenarioConfig, WaveCase,
};

#[derive(Parser)]
#[command(name = "wavepilot", about = "Underwater vehicle trajectory tracking in waves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mission cell and write its CSV log.
    Run {
        /// Scenario file (TOML); built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Wave case: w1, w2, w3 or still.
        #[arg(long)]
        case: Option<String>,
        /// Controller: cpd, ff or nmpc.
        #[arg(long)]
        controller: Option<String>,
        /// Master seed override (sea and sensor streams).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the mission CSV.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run the full case × controller matrix and write the summary.
    Matrix {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Wave-prediction diagnostics at a fixed pose: records, predicts, and
    /// compares elevation and loads against the truth sea.
    Predict {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run the built-in invariant checks and report pass/fail.
    Validate,
    /// Print the default scenario configuration as TOML.
    PrintConfig,
}

fn load_config(
    path: &Option<PathBuf>,
    case: &Option<String>,
    controller: &Option<String>,
    seed: Option<u64>,
) -> Result<ScenarioConfig, Error> {
    let mut cfg = match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(c) = case {
        cfg.apply_case(WaveCase::parse(c)?);
    }
    if let Some(k) = controller {
        cfg.controller = parse_controller(k)?;
    }
    if let Some(s) = seed {
        cfg.reseed(s);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(
    config: Option<PathBuf>,
    case: Option<String>,
    controller: Option<String>,
    seed: Option<u64>,
    out_dir: PathBuf,
) -> Result<bool, Error> {
    let cfg = load_config(&config, &case, &controller, seed)?;
    let outcome = harness::run_mission(&cfg)?;
    let name = format!(
        "{}_{}.csv",
        case.as_deref().unwrap_or(&outcome.log.case_label),
        cfg.controller.label()
    );
    let path = out_dir.join(name);
    harness::write_mission_csv(&outcome.log, &path)?;
    println!("wrote {}", path.display());
    match &outcome.failure {
        Some(f) => {
            eprintln!("mission FAILED: {f}");
            Ok(false)
        }
        None => {
            let m = harness::compute_metrics(&outcome.log);
            println!(
                "rmse (x, z, theta) = ({:.4} m, {:.4} m, {:.4} rad)",
                m.rmse[0], m.rmse[1], m.rmse[2]
            );
            println!(
                "max error (x, z, theta) = ({:.4}, {:.4}, {:.4}); mean power = {:.3} W",
                m.max_error[0], m.max_error[1], m.max_error[2], m.mean_power_mech
            );
            let solve: Vec<f64> = outcome
                .log
                .rows
                .iter()
                .filter(|r| r.solve_time_s > 0.0)
                .map(|r| r.solve_time_s * 1e3)
                .collect();
            if !solve.is_empty() {
                println!(
                    "solver: mean {:.2} ms, max {:.2} ms over {} solves",
                    solve.iter().sum::<f64>() / solve.len() as f64,
                    solve.iter().fold(0.0_f64, |a, &b| a.max(b)),
                    solve.len()
                );
            }
            Ok(true)
        }
    }
}

fn cmd_matrix(config: Option<PathBuf>, seed: Option<u64>, out_dir: PathBuf) -> Result<bool, Error> {
    let cfg = load_config(&config, &None, &None, seed)?;
    std::fs::create_dir_all(&out_dir)?;
    let summary = harness::run_matrix(&cfg, Some(&out_dir));
    print!("{}", harness::format_summary(&summary));
    let mean_solve: Vec<f64> = summary
        .cells
        .iter()
        .filter(|c| c.mean_solve_time_ms > 0.0)
        .map(|c| c.mean_solve_time_ms)
        .collect();
    if !mean_solve.is_empty() {
        println!(
            "solver mean time across cells: {:.2} ms",
            mean_solve.iter().sum::<f64>() / mean_solve.len() as f64
        );
    }
    let path = out_dir.join("summary.toml");
    harness::write_summary(&summary, &path)?;
    println!("wrote {}", path.display());
    Ok(summary.cells.iter().all(|c| c.failure.is_none()))
}

fn cmd_predict(
    config: Option<PathBuf>,
    case: Option<String>,
    seed: Option<u64>,
    out_dir: PathBuf,
) -> Result<bool, Error> {
    use std::fmt::Write as _;
    use wavepilot::dswp::WavePredictor;
    use wavepilot::vehicle::wave_load;

    let cfg = load_config(&config, &case, &None, seed)?;
    let sea = cfg.sea.build()?;
    let mut predictor = WavePredictor::new(cfg.dswp, sea.depth, sea.gravity)?;
    let dt = cfg.mission.dt;
    let t_m = cfg.mission.record_duration;
    let steps = (t_m / dt).round() as usize;
    for k in 0..steps {
        let t = k as f64 * dt;
        predictor.record(sea.elevation(0.0, t), t)?;
    }
    predictor.refresh_if_due(t_m)?;

    let x = cfg.mission.measurement_offset;
    let z = -5.0;
    let horizon = ((cfg.mission.total_duration - t_m) / dt).round() as usize;
    let mut csv = String::from("t,zeta_truth,zeta_pred,in_region,load_x_truth,load_x_pred,load_z_truth,load_z_pred,load_m_truth,load_m_pred\n");
    let mut err_sq = 0.0;
    let mut n_in = 0usize;
    let mut truth_series: Vec<[f64; 3]> = Vec::new();
    let mut pred_series: Vec<[f64; 3]> = Vec::new();
    for k in 0..horizon {
        let t = t_m + k as f64 * dt;
        let (zeta_pred, in_region) = predictor.predict_elevation(x, t).unwrap_or((0.0, false));
        let zeta_truth = sea.elevation(x, t);
        let pose_state = wavepilot::vehicle::VehicleState::at_rest(x, z, 0.0);
        let load_truth = wave_load(&cfg.vehicle, x, z, 0.0, None, &|sx, sz| {
            sea.particle_kinematics(sx, sz.clamp(-sea.depth, 0.0), t)
        })?;
        let preview = predictor.preview(x, z, 0.0, None, t, dt, 1, &cfg.vehicle)?;
        let load_pred = preview.loads[0];
        let _ = pose_state;
        if in_region {
            err_sq += (zeta_pred - zeta_truth) * (zeta_pred - zeta_truth);
            n_in += 1;
            truth_series.push([load_truth.surge, load_truth.heave, load_truth.pitch]);
            pred_series.push([load_pred.surge, load_pred.heave, load_pred.pitch]);
        }
        let _ = writeln!(
            csv,
            "{t:.4},{zeta_truth:.9e},{zeta_pred:.9e},{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
            u8::from(in_region),
            load_truth.surge,
            load_pred.surge,
            load_truth.heave,
            load_pred.heave,
            load_truth.pitch,
            load_pred.pitch
        );
    }
    std::fs::create_dir_all(&out_dir)?;
    let path = out_dir.join("predict.csv");
    std::fs::write(&path, csv)?;
    println!("wrote {}", path.display());

    let hs = sea.significant_wave_height();
    let rmse = (err_sq / n_in.max(1) as f64).sqrt();
    println!(
        "elevation prediction RMSE over {} in-region samples: {:.4} m ({:.2}% of Hs = {:.2} m)",
        n_in,
        rmse,
        if hs > 0.0 { 100.0 * rmse / hs } else { 0.0 },
        hs
    );
    for (i, name) in ["surge", "heave", "pitch"].iter().enumerate() {
        let a: Vec<f64> = truth_series.iter().map(|r| r[i]).collect();
        let b: Vec<f64> = pred_series.iter().map(|r| r[i]).collect();
        println!("load correlation ({name}): {:.4}", correlation(&a, &b));
    }
    Ok(true)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..n {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

fn cmd_validate() -> bool {
    use nalgebra::Vector3;
    use wavepilot::vehicle::{
        actuator_limits, coriolis_matrix, mass_matrix, GeneralizedForce, VehicleModel,
        VehicleParams, VehicleState,
    };
    use wavepilot::wave::{dispersion_residual, solve_dispersion};

    let mut all_ok = true;
    let mut check = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    // Dispersion sweep residuals.
    let mut worst = 0.0_f64;
    for &d in &[5.0, 54.0, 500.0] {
        let mut w = 0.1;
        while w <= 5.0 {
            if let Ok(k) = solve_dispersion(w, d, 9.81) {
                worst = worst.max(dispersion_residual(w, k, d, 9.81));
            } else {
                worst = f64::INFINITY;
            }
            w += 0.1;
        }
    }
    check("dispersion residual < 1e-9 across sweep", worst < 1e-9);

    // Inertia matrix SPD; Coriolis skew.
    let p = VehicleParams::default();
    check("inertia matrix SPD", mass_matrix(&p).cholesky().is_some());
    let mut skew_worst = 0.0_f64;
    for i in 0..100 {
        let s = i as f64 * 0.37;
        let nu = Vector3::new((s * 1.3).sin(), (s * 0.7).cos(), (s * 2.1).sin());
        let c = coriolis_matrix(&p, &nu);
        skew_worst = skew_worst.max((c + c.transpose()).amax());
    }
    check("coriolis skew-symmetry < 1e-12", skew_worst < 1e-12);

    // Equilibrium hold over 10 s.
    let model = VehicleModel::new(p).unwrap();
    let mut state = VehicleState::at_rest(50.0, -8.0, 0.0);
    let hover = GeneralizedForce::new(0.0, p.weight - p.buoyancy, 0.0);
    let mut ok = true;
    for k in 0..100 {
        state = match model.rk4_step_held(&state, 0.1, hover, GeneralizedForce::ZERO) {
            Ok(s) => s,
            Err(_) => {
                ok = false;
                break;
            }
        };
        let _ = k;
    }
    let drift = ((state.x() - 50.0).powi(2) + (state.z() + 8.0).powi(2)).sqrt();
    check("hover equilibrium drift < 1e-6 m over 10 s", ok && drift < 1e-6);

    // RK4 observed order on the undisturbed plant.
    let x0 = VehicleState::new(0.0, -5.0, 0.1, 0.4, -0.2, 0.1);
    let mu = GeneralizedForce::new(5.0, -4.0, 0.3);
    let run = |dtv: f64| {
        let mut s = x0;
        let steps = (1.0 / dtv).round() as usize;
        for k in 0..steps {
            s = model
                .rk4_step(&s, k as f64 * dtv, dtv, &|_| mu, &|_, _| GeneralizedForce::ZERO)
                .unwrap();
        }
        s.as_vector6()
    };
    let reference = run(1e-4);
    let factor = (run(0.02) - reference).norm() / (run(0.01) - reference).norm();
    check(
        "rk4 observed order >= 3.5 (halving factor in [12, 20])",
        (12.0..=20.0).contains(&factor),
    );

    // Actuator box from the thruster layout.
    let lim = actuator_limits(&p);
    check(
        "surge/heave actuation bound = 98.99 N",
        (lim.surge - 98.99).abs() < 0.01 && (lim.heave - 98.99).abs() < 0.01,
    );

    // Predictable-region arithmetic on the two-component example.
    let region_ok = {
        use wavepilot::dswp::{ReconstructedSpectrum, SpectralComponent};
        let g = 9.81;
        let spec = ReconstructedSpectrum {
            components: vec![
                SpectralComponent {
                    amplitude: 1.0,
                    phase: 0.0,
                    angular_frequency: g / 10.0,
                    wavenumber: (g / 10.0) * (g / 10.0) / g,
                },
                SpectralComponent {
                    amplitude: 1.0,
                    phase: 0.0,
                    angular_frequency: g / 5.0,
                    wavenumber: (g / 5.0) * (g / 5.0) / g,
                },
            ],
            dc_offset: 0.0,
            t_ref: 0.0,
            record_duration: 300.0,
            amp_floor: 0.0,
            band: (0.0, 10.0),
            gravity: g,
        };
        match spec.predictable_region(50.0) {
            Ok(r) => (r.t_s - 10.0).abs() < 1e-12 && (r.t_f - 305.0).abs() < 1e-12,
            Err(_) => false,
        }
    };
    check("predictable-region arithmetic exact", region_ok);

    all_ok
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            case,
            controller,
            seed,
            out_dir,
        } => cmd_run(config, case, controller, seed, out_dir),
        Command::Matrix {
            config,
            seed,
            out_dir,
        } => cmd_matrix(config, seed, out_dir),
        Command::Predict {
            config,
            case,
            seed,
            out_dir,
        } => cmd_predict(config, case, seed, out_dir),
        Command::Validate => Ok(cmd_validate()),
        Command::PrintConfig => ScenarioConfig::default()
            .to_toml()
            .map(|t| {
                println!("{t}");
                true
            })
            .map_err(Into::into),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
