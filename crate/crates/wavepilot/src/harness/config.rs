//! Scenario configuration: one structured file (or the built-in defaults)
//! describes the sea, the vehicle, the estimator, the controllers, and the
//! mission geometry. Everything that involves randomness carries an explicit
//! seed so each run is reproducible bit for bit.

use crate::control::{ControllerKind, FfConfig, NmpcConfig, PdConfig};
use crate::dswp::DswpConfig;
use crate::error::Error;
use crate::estimator::EkfConfig;
use crate::vehicle::VehicleParams;
use crate::wave::{synthesize_sea, SeaState, SpectrumShape, SpectrumSpec, WaveComponent};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// The three irregular-sea cases of the study plus still water.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveCase {
    W1,
    W2,
    W3,
    Still,
}

impl WaveCase {
    pub const MATRIX: [WaveCase; 3] = [WaveCase::W1, WaveCase::W2, WaveCase::W3];

    pub fn label(&self) -> &'static str {
        match self {
            WaveCase::W1 => "w1",
            WaveCase::W2 => "w2",
            WaveCase::W3 => "w3",
            WaveCase::Still => "still",
        }
    }

    /// (significant wave height, peak period).
    pub fn statistics(&self) -> (f64, f64) {
        match self {
            WaveCase::W1 => (2.78, 7.1),
            WaveCase::W2 => (3.47, 9.5),
            WaveCase::W3 => (3.24, 11.1),
            WaveCase::Still => (0.0, 8.0),
        }
    }

    pub fn peak_frequency(&self) -> f64 {
        2.0 * PI / self.statistics().1
    }

    /// Retained band for the predictor, scaled to the peak: the low cut at
    /// 0.7·ωp trims only negligible spectral energy while keeping the
    /// fastest retained component slow enough that the validity window
    /// covers the full control horizon at the 50 m standoff.
    pub fn dswp_band(&self, sample_interval: f64) -> (f64, f64) {
        let wp = self.peak_frequency();
        let nyquist = PI / sample_interval;
        (0.7 * wp, (3.5 * wp).min(0.95 * nyquist))
    }

    pub fn parse(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "w1" => Ok(WaveCase::W1),
            "w2" => Ok(WaveCase::W2),
            "w3" => Ok(WaveCase::W3),
            "still" => Ok(WaveCase::Still),
            other => Err(Error::Config(format!("unknown wave case '{other}'"))),
        }
    }
}

pub fn parse_controller(s: &str) -> Result<ControllerKind, Error> {
    match s.to_ascii_lowercase().as_str() {
        "cpd" | "c-pd" | "pd" => Ok(ControllerKind::CascadedPd),
        "ff" => Ok(ControllerKind::FeedForward),
        "nmpc" | "mpc" => Ok(ControllerKind::Nmpc),
        other => Err(Error::Config(format!("unknown controller '{other}'"))),
    }
}

/// How the truth sea is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeaSource {
    /// Synthesize from statistical parameters.
    Spectrum { spec: SpectrumSpec },
    /// Explicit component list.
    Components { components: Vec<WaveComponent> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeaConfig {
    /// Water depth (m).
    pub depth: f64,
    pub gravity: f64,
    /// Second-order elevation/kinematics terms in the truth sea.
    pub second_order: bool,
    pub source: SeaSource,
}

impl Default for SeaConfig {
    fn default() -> Self {
        Self {
            depth: 54.0,
            gravity: 9.81,
            second_order: true,
            source: SeaSource::Spectrum {
                spec: SpectrumSpec {
                    significant_wave_height: 2.78,
                    peak_period: 7.1,
                    component_count: 128,
                    rng_seed: 42,
                    shape: SpectrumShape::Jonswap,
                },
            },
        }
    }
}

impl SeaConfig {
    pub fn build(&self) -> Result<SeaState, Error> {
        let mut sea = match &self.source {
            SeaSource::Spectrum { spec } => synthesize_sea(spec, self.depth, self.gravity)?,
            SeaSource::Components { components } => {
                SeaState::new(components.clone(), self.depth, self.gravity)?
            }
        };
        sea.second_order = self.second_order;
        Ok(sea)
    }

    /// Flat sea: a single zero-height component.
    pub fn still(depth: f64, gravity: f64) -> Self {
        let comp = WaveComponent {
            height: 0.0,
            angular_frequency: 1.0,
            wavenumber: 1.0 / gravity,
            phase: 0.0,
            deep_water: true,
        };
        Self {
            depth,
            gravity,
            second_order: false,
            source: SeaSource::Components {
                components: vec![comp],
            },
        }
    }
}

/// Geometry and timing of the square tracking mission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionSpec {
    /// Start (and end) pose (x m, z m, θ rad).
    pub start: [f64; 3],
    /// Square side length (m).
    pub side_length: f64,
    /// Waypoint spacing along each leg (m).
    pub waypoint_spacing: f64,
    /// Elevation-record accumulation time T_M (s); phase 2 begins after it.
    pub record_duration: f64,
    /// Total mission time (s).
    pub total_duration: f64,
    /// Control/sim step (s).
    pub dt: f64,
    /// Nominal standoff of the vehicle from the measuring point (m), used
    /// by the prediction diagnostics.
    pub measurement_offset: f64,
}

impl Default for MissionSpec {
    fn default() -> Self {
        Self {
            start: [50.0, -8.0, 0.0],
            side_length: 5.0,
            waypoint_spacing: 0.5,
            record_duration: 300.0,
            total_duration: 600.0,
            dt: 0.1,
            measurement_offset: 50.0,
        }
    }
}

impl MissionSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.side_length > 0.0) {
            return Err(Error::Config("side_length must be > 0".into()));
        }
        if !(self.waypoint_spacing > 0.0) {
            return Err(Error::Config("waypoint_spacing must be > 0".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config("dt must be > 0".into()));
        }
        for (name, v) in [
            ("record_duration", self.record_duration),
            ("total_duration", self.total_duration),
        ] {
            let ratio = v / self.dt;
            if !(v > 0.0) || (ratio - ratio.round()).abs() > 1e-6 {
                return Err(Error::Config(format!(
                    "{name} must be a positive multiple of dt"
                )));
            }
        }
        if self.total_duration <= self.record_duration {
            return Err(Error::Config(
                "total_duration must exceed record_duration".into(),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.total_duration / self.dt).round() as usize
    }

    pub fn tracking_duration(&self) -> f64 {
        self.total_duration - self.record_duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerConfig {
    /// Coefficient of the |μ|^(3/2) electrical-power proxy.
    pub thrust_coefficient: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            thrust_coefficient: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    /// Standard deviation of the injected pose measurement noise (x, z, θ).
    pub sensor_noise: [f64; 3],
    /// Seed of the sensor-noise stream.
    pub sensor_seed: u64,
    /// Feed the disturbance preview to the EKF prediction.
    pub ekf_uses_preview: bool,
    /// Zero the preview handed to the controllers (ablation study).
    pub ablate_preview: bool,
    /// Validation mode: no sensor noise and the estimator integrates the
    /// true wave loads, isolating pure numerics.
    pub zero_noise_validation: bool,
    /// Keep every predictive-controller solution (initial state, preview,
    /// controls, predicted states) on the outcome for external re-simulation.
    pub record_solutions: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            sensor_noise: [0.01, 0.01, 0.005],
            sensor_seed: 7,
            ekf_uses_preview: true,
            ablate_preview: false,
            zero_noise_validation: false,
            record_solutions: false,
        }
    }
}

/// Complete description of one mission run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub controller: ControllerKind,
    pub sea: SeaConfig,
    pub vehicle: VehicleParams,
    pub mission: MissionSpec,
    pub dswp: DswpConfig,
    pub ekf: EkfConfig,
    pub cpd: PdConfig,
    pub ff: FfConfig,
    pub nmpc: NmpcConfig,
    pub power: PowerConfig,
    pub options: RunOptions,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            controller: ControllerKind::Nmpc,
            sea: SeaConfig::default(),
            vehicle: VehicleParams::default(),
            mission: MissionSpec::default(),
            dswp: DswpConfig::default(),
            ekf: EkfConfig::default(),
            cpd: PdConfig::default(),
            ff: FfConfig::default(),
            nmpc: NmpcConfig::default(),
            power: PowerConfig::default(),
            options: RunOptions::default(),
        }
    }
}

impl ScenarioConfig {
    /// Default cell configuration for a wave case and controller.
    pub fn for_case(case: WaveCase, controller: ControllerKind) -> Self {
        let mut cfg = Self {
            controller,
            ..Default::default()
        };
        cfg.apply_case(case);
        cfg
    }

    /// Point the sea and predictor band at a wave case, keeping everything
    /// else untouched.
    pub fn apply_case(&mut self, case: WaveCase) {
        match case {
            WaveCase::Still => {
                self.sea = SeaConfig::still(self.sea.depth, self.sea.gravity);
            }
            _ => {
                let (hs, tp) = case.statistics();
                let seed = match &self.sea.source {
                    SeaSource::Spectrum { spec } => spec.rng_seed,
                    _ => 42,
                };
                self.sea.source = SeaSource::Spectrum {
                    spec: SpectrumSpec {
                        significant_wave_height: hs,
                        peak_period: tp,
                        component_count: 128,
                        rng_seed: seed,
                        shape: SpectrumShape::Jonswap,
                    },
                };
                self.dswp.band = case.dswp_band(self.dswp.sample_interval);
            }
        }
    }

    /// Override every seed from one master value.
    pub fn reseed(&mut self, master: u64) {
        if let SeaSource::Spectrum { spec } = &mut self.sea.source {
            spec.rng_seed = master;
        }
        self.options.sensor_seed = master.wrapping_add(1000);
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.vehicle.validate()?;
        self.mission.validate()?;
        self.ekf.validate()?;
        self.nmpc.validate()?;
        if (self.dswp.sample_interval - self.mission.dt).abs() > 1e-9 {
            return Err(Error::Config(
                "dswp.sample_interval must equal mission.dt (synchronous sampling)".into(),
            ));
        }
        if (self.dswp.record_duration - self.mission.record_duration).abs() > 1e-9 {
            return Err(Error::Config(
                "dswp.record_duration must equal mission.record_duration".into(),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, Error> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, Error> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}
