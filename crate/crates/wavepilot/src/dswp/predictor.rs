//! Receding fixed-point wave predictor: owns the elevation ring buffer,
//! refreshes the cached spectrum on a fixed cadence, and emits disturbance
//! previews for the controllers.

use super::buffer::{ElevationBuffer, ElevationRecord};
use super::spectrum::{estimate_spectrum, PredictableRegion, ReconstructedSpectrum};
use crate::error::Error;
use crate::vehicle::{wave_load, GeneralizedForce, VehicleParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DswpConfig {
    /// Measurement record duration T_M (s).
    pub record_duration: f64,
    /// Sample interval (s).
    pub sample_interval: f64,
    /// Amplitude floor as a fraction of the largest in-band amplitude.
    pub amp_floor_fraction: f64,
    /// Retained frequency band [lo, hi] (rad/s).
    pub band: (f64, f64),
    /// How often the cached spectrum is re-estimated (s).
    pub refresh_interval: f64,
    /// Include second-order terms in reconstructed elevation/kinematics.
    pub second_order: bool,
}

impl Default for DswpConfig {
    fn default() -> Self {
        Self {
            record_duration: 300.0,
            sample_interval: 0.1,
            amp_floor_fraction: 0.01,
            band: (0.25, 2.5),
            refresh_interval: 1.0,
            second_order: true,
        }
    }
}

/// Per-horizon-step predicted generalized wave loads with their validity
/// window.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbancePreview {
    /// Time of the first entry (s).
    pub t0: f64,
    /// Step between entries (s).
    pub dt: f64,
    pub loads: Vec<GeneralizedForce>,
    /// Validity window start (absolute s).
    pub t_s: f64,
    /// Validity window end (absolute s).
    pub t_f: f64,
    /// The requested horizon ran past t_f and was cut short.
    pub truncated: bool,
    /// Some emitted timestamp lies outside [t_s, t_f].
    pub out_of_region: bool,
}

impl DisturbancePreview {
    pub fn len(&self) -> usize {
        self.loads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loads.is_empty()
    }

    /// All-zero preview of the requested length (no retained components).
    pub fn zeros(t0: f64, dt: f64, n: usize) -> Self {
        Self {
            t0,
            dt,
            loads: vec![GeneralizedForce::ZERO; n],
            t_s: f64::NEG_INFINITY,
            t_f: f64::INFINITY,
            truncated: false,
            out_of_region: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WavePredictor {
    pub cfg: DswpConfig,
    depth: f64,
    gravity: f64,
    buffer: ElevationBuffer,
    spectrum: Option<ReconstructedSpectrum>,
    last_refresh: Option<f64>,
}

impl WavePredictor {
    pub fn new(cfg: DswpConfig, depth: f64, gravity: f64) -> Result<Self, Error> {
        if !(cfg.amp_floor_fraction >= 0.0) {
            return Err(Error::InvalidParameter(
                "amp_floor_fraction must be >= 0".into(),
            ));
        }
        if !(cfg.refresh_interval > 0.0) {
            return Err(Error::InvalidParameter(
                "refresh_interval must be > 0".into(),
            ));
        }
        let buffer = ElevationBuffer::new(cfg.record_duration, cfg.sample_interval)?;
        Ok(Self {
            cfg,
            depth,
            gravity,
            buffer,
            spectrum: None,
            last_refresh: None,
        })
    }

    /// Push one elevation sample measured at the fixed point.
    pub fn record(&mut self, elevation: f64, t: f64) -> Result<(), Error> {
        self.buffer.push(elevation, t)
    }

    /// True once a full record has accumulated.
    pub fn ready(&self) -> bool {
        self.buffer.is_full()
    }

    pub fn snapshot(&self) -> ElevationRecord {
        self.buffer.snapshot()
    }

    pub fn spectrum(&self) -> Option<&ReconstructedSpectrum> {
        self.spectrum.as_ref()
    }

    /// Re-estimate the cached spectrum if the record is full and the refresh
    /// cadence has elapsed. Returns whether a refresh happened.
    pub fn refresh_if_due(&mut self, t: f64) -> Result<bool, Error> {
        if !self.buffer.is_full() {
            return Ok(false);
        }
        if let Some(last) = self.last_refresh {
            if t - last < self.cfg.refresh_interval - 1e-9 {
                return Ok(false);
            }
        }
        let record = self.buffer.snapshot();
        // Relative floor: estimate unfloored, then cut at a fraction of the
        // largest in-band amplitude.
        self.spectrum = match estimate_spectrum(&record, 0.0, self.cfg.band, self.gravity) {
            Ok(raw) => {
                let max_amp = raw
                    .components
                    .iter()
                    .map(|c| c.amplitude)
                    .fold(0.0_f64, f64::max);
                let floor = self.cfg.amp_floor_fraction * max_amp;
                let mut filtered = raw.clone();
                filtered.components.retain(|c| c.amplitude >= floor && c.amplitude > 0.0);
                filtered.amp_floor = floor;
                if filtered.dc_offset.abs() < floor {
                    filtered.dc_offset = 0.0;
                }
                if filtered.components.is_empty() {
                    Some(ReconstructedSpectrum::empty(self.gravity))
                } else {
                    Some(filtered)
                }
            }
            Err(Error::NoPredictableComponents) => {
                Some(ReconstructedSpectrum::empty(self.gravity))
            }
            Err(e) => return Err(e),
        };
        self.last_refresh = Some(t);
        Ok(true)
    }

    /// Predicted elevation at distance `x` from the measuring point; `None`
    /// until the first spectrum estimate exists.
    pub fn predict_elevation(&self, x: f64, t: f64) -> Option<(f64, bool)> {
        self.spectrum
            .as_ref()
            .map(|s| s.predict_elevation(x, t, self.cfg.second_order))
    }

    pub fn predictable_region(&self, x: f64) -> Option<Result<PredictableRegion, Error>> {
        self.spectrum.as_ref().map(|s| s.predictable_region(x))
    }

    /// Predicted generalized wave loads over `n_steps` of `dt` starting at
    /// `t0`, for a vehicle frozen at pose (x, z, θ) — kinematics along the
    /// horizon are evaluated at the query pose, not at predicted positions,
    /// so the preview stays an exogenous signal for the optimizer.
    ///
    /// Steps past the validity end t_f are cut and flagged `truncated`
    /// (always keeping at least one entry, flagged out-of-region if need be).
    pub fn preview(
        &self,
        x: f64,
        z: f64,
        theta: f64,
        vehicle_nu: Option<(f64, f64)>,
        t0: f64,
        dt: f64,
        n_steps: usize,
        params: &VehicleParams,
    ) -> Result<DisturbancePreview, Error> {
        if z < -self.depth || z > 0.0 {
            return Err(Error::OutOfDomain(format!(
                "preview pose z = {z} outside water column"
            )));
        }
        let spectrum = match &self.spectrum {
            Some(s) if !s.is_empty() => s,
            _ => return Ok(DisturbancePreview::zeros(t0, dt, n_steps)),
        };
        let region = spectrum.predictable_region(x)?;
        let sea = spectrum.to_sea_state(self.depth, self.cfg.second_order)?;
        let depth = self.depth;

        let mut loads = Vec::with_capacity(n_steps);
        let mut truncated = false;
        let mut out_of_region = false;
        for k in 0..n_steps {
            let t = t0 + k as f64 * dt;
            if t > region.t_f + 1e-9 && k > 0 {
                truncated = true;
                break;
            }
            if !region.contains(t) {
                out_of_region = true;
            }
            let load = wave_load(params, x, z, theta, vehicle_nu, &|sx, sz| {
                sea.particle_kinematics(sx, sz.clamp(-depth, 0.0), t)
            })?;
            loads.push(load);
        }
        Ok(DisturbancePreview {
            t0,
            dt,
            loads,
            t_s: region.t_s,
            t_f: region.t_f,
            truncated,
            out_of_region,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{SeaState, WaveComponent};

    fn single_wave_sea() -> SeaState {
        // On-grid deep-water component so reconstruction is leakage-free.
        let omega = 2.0 * std::f64::consts::PI * 40.0 / 300.0;
        let c = WaveComponent::deep_water(1.2, omega, 0.7, 9.81).unwrap();
        let mut sea = SeaState::new(vec![c], 54.0, 9.81).unwrap();
        sea.second_order = false;
        sea
    }

    fn filled_predictor(sea: &SeaState) -> WavePredictor {
        let cfg = DswpConfig {
            second_order: false,
            band: (0.1, 3.0),
            ..Default::default()
        };
        let mut p = WavePredictor::new(cfg, 54.0, 9.81).unwrap();
        for j in 0..3000 {
            let t = j as f64 * 0.1;
            p.record(sea.elevation(0.0, t), t).unwrap();
        }
        assert!(p.ready());
        p.refresh_if_due(300.0).unwrap();
        p
    }

    #[test]
    fn refresh_respects_cadence() {
        let sea = single_wave_sea();
        let mut p = filled_predictor(&sea);
        assert!(!p.refresh_if_due(300.5).unwrap());
        p.record(sea.elevation(0.0, 300.0), 300.0).unwrap();
        assert!(p.refresh_if_due(301.0).unwrap());
    }

    #[test]
    fn empty_spectrum_previews_zeros() {
        let cfg = DswpConfig {
            amp_floor_fraction: 0.0,
            ..Default::default()
        };
        let mut p = WavePredictor::new(cfg, 54.0, 9.81).unwrap();
        for j in 0..3000 {
            p.record(0.0, j as f64 * 0.1).unwrap();
        }
        p.refresh_if_due(300.0).unwrap();
        let prev = p
            .preview(50.0, -5.0, 0.0, None, 300.0, 0.1, 20, &VehicleParams::default())
            .unwrap();
        assert_eq!(prev.len(), 20);
        assert!(prev.loads.iter().all(|l| *l == GeneralizedForce::ZERO));
        assert!(!prev.truncated && !prev.out_of_region);
    }

    #[test]
    fn preview_is_deterministic() {
        let sea = single_wave_sea();
        let p = filled_predictor(&sea);
        let params = VehicleParams::default();
        let a = p
            .preview(50.0, -5.0, 0.05, None, 305.0, 0.1, 20, &params)
            .unwrap();
        let b = p
            .preview(50.0, -5.0, 0.05, None, 305.0, 0.1, 20, &params)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn preview_truncates_past_validity_end() {
        let sea = single_wave_sea();
        let p = filled_predictor(&sea);
        let params = VehicleParams::default();
        let region = p.predictable_region(50.0).unwrap().unwrap();
        // Ask far past t_f.
        let n = 400;
        let prev = p
            .preview(50.0, -5.0, 0.0, None, region.t_f - 1.0, 0.1, n, &params)
            .unwrap();
        assert!(prev.truncated);
        assert!(prev.len() < n);
        // Every emitted timestamp within the window.
        for k in 0..prev.len() {
            let t = prev.t0 + k as f64 * prev.dt;
            assert!(t <= prev.t_f + 1e-9);
        }
    }

    #[test]
    fn out_of_region_flag_iff_timestamp_outside() {
        let sea = single_wave_sea();
        let p = filled_predictor(&sea);
        let params = VehicleParams::default();
        let region = p.predictable_region(50.0).unwrap().unwrap();
        let inside = p
            .preview(50.0, -5.0, 0.0, None, region.t_s + 1.0, 0.1, 10, &params)
            .unwrap();
        assert!(!inside.out_of_region);
        let before = p
            .preview(50.0, -5.0, 0.0, None, region.t_s - 5.0, 0.1, 10, &params)
            .unwrap();
        assert!(before.out_of_region);
    }

    #[test]
    fn preview_rejects_pose_outside_column() {
        let sea = single_wave_sea();
        let p = filled_predictor(&sea);
        let params = VehicleParams::default();
        assert!(p
            .preview(50.0, -60.0, 0.0, None, 305.0, 0.1, 5, &params)
            .is_err());
    }
}
