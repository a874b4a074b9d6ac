//! Spectrum extraction from an elevation record and phase-propagated
//! reconstruction.
//!
//! DFT convention: F_n = Σ_j ζ_j·exp(−i·2πjn/J). One-sided amplitudes are
//! A_n = (2/J)|F_n| for interior bins, |F_n|/J for the DC and Nyquist bins.
//! Reconstruction evaluates A_n·cos(k_n·x − ω_n·(t − t_ref) + ε_n); matching
//! that −ωt sign requires the conjugated DFT phase, ε_n = −∠F_n. Wavenumbers
//! use the deep-water filter k_n = ω_n²/g throughout, and so do the region
//! celerities c = g/ω.

use super::buffer::ElevationRecord;
use crate::error::Error;
use crate::wave::{wrap_two_pi, SeaState, WaveComponent};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// One retained spectral line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralComponent {
    /// Amplitude A_n (m); the implied wave height is 2·A_n.
    pub amplitude: f64,
    /// Phase ε_n (rad) in [0, 2π), cosine convention.
    pub phase: f64,
    /// ω_n (rad/s).
    pub angular_frequency: f64,
    /// k_n = ω_n²/g (rad/m).
    pub wavenumber: f64,
}

impl SpectralComponent {
    /// Deep-water celerity c = g/ω.
    pub fn celerity(&self, gravity: f64) -> f64 {
        gravity / self.angular_frequency
    }
}

/// Bounded spectrum reconstructed from a record.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedSpectrum {
    /// Components with strictly increasing ω_n.
    pub components: Vec<SpectralComponent>,
    /// Mean offset of the record (the DC bin), zeroed if below the floor.
    pub dc_offset: f64,
    /// Timestamp of the first record sample; phases are relative to it.
    pub t_ref: f64,
    /// Record duration T_M = J·Δt (s).
    pub record_duration: f64,
    /// Amplitude floor that was applied (m).
    pub amp_floor: f64,
    /// Frequency band that was applied (rad/s).
    pub band: (f64, f64),
    pub gravity: f64,
}

/// Time window over which a prediction at distance `x_p` is valid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictableRegion {
    /// Window start (absolute time, s).
    pub t_s: f64,
    /// Window end (absolute time, s).
    pub t_f: f64,
    /// Distance from the measuring point (m).
    pub x_p: f64,
}

impl PredictableRegion {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_s && t <= self.t_f
    }

    pub fn duration(&self) -> f64 {
        self.t_f - self.t_s
    }
}

impl ReconstructedSpectrum {
    /// Spectrum with no retained components; all predictions are zero.
    pub fn empty(gravity: f64) -> Self {
        Self {
            components: Vec::new(),
            dc_offset: 0.0,
            t_ref: 0.0,
            record_duration: 0.0,
            amp_floor: 0.0,
            band: (0.0, 0.0),
            gravity,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Valid prediction window at distance `x_p` from the measuring point.
    ///
    /// The window opens once the slowest retained component measured at the
    /// start of the record has arrived (t_s = t_ref + x_p/c_slowest, the
    /// slowest component being the highest-frequency one) and closes when
    /// the fastest retained component measured at the end of the record has
    /// passed (t_f = t_ref + T_M + x_p/c_fastest).
    pub fn predictable_region(&self, x_p: f64) -> Result<PredictableRegion, Error> {
        if self.components.is_empty() {
            return Err(Error::NoPredictableComponents);
        }
        // ω strictly increasing: first component is fastest, last is slowest.
        let c_fastest = self.components[0].celerity(self.gravity);
        let c_slowest = self.components[self.components.len() - 1].celerity(self.gravity);
        let t_s = self.t_ref + x_p / c_slowest;
        let t_f = self.t_ref + self.record_duration + x_p / c_fastest;
        if t_s >= t_f {
            return Err(Error::EmptyPredictableRegion { t_s, t_f });
        }
        Ok(PredictableRegion { t_s, t_f, x_p })
    }

    /// Predicted elevation at (x, t); x is the distance from the measuring
    /// point. Returns the value and whether t lies inside the predictable
    /// region (out-of-region evaluation is allowed but flagged).
    pub fn predict_elevation(&self, x: f64, t: f64, second_order: bool) -> (f64, bool) {
        let in_region = self
            .predictable_region(x)
            .map(|r| r.contains(t))
            .unwrap_or(false);
        let mut zeta = self.dc_offset;
        let dt_rel = t - self.t_ref;
        for c in &self.components {
            let arg = c.wavenumber * x - c.angular_frequency * dt_rel + c.phase;
            zeta += c.amplitude * arg.cos();
            if second_order {
                zeta += 0.5 * c.wavenumber * c.amplitude * c.amplitude * (2.0 * arg).cos();
            }
        }
        (zeta, in_region)
    }

    /// View the reconstruction as a sea state (deep-water components, phases
    /// folded to absolute time) so the particle-kinematics and wave-load
    /// machinery can run on it unchanged. The DC offset carries no kinematics
    /// and is dropped.
    pub fn to_sea_state(&self, depth: f64, second_order: bool) -> Result<SeaState, Error> {
        if self.components.is_empty() {
            return Err(Error::NoPredictableComponents);
        }
        let components = self
            .components
            .iter()
            .map(|c| WaveComponent {
                height: 2.0 * c.amplitude,
                angular_frequency: c.angular_frequency,
                wavenumber: c.wavenumber,
                phase: wrap_two_pi(c.phase + c.angular_frequency * self.t_ref),
                deep_water: true,
            })
            .collect();
        let mut sea = SeaState::new(components, depth, self.gravity)?;
        sea.second_order = second_order;
        Ok(sea)
    }
}

/// Extract the bounded one-sided spectrum of a record.
///
/// Components outside `band` (rad/s, inclusive) or with amplitude below
/// `amp_floor` are discarded; an empty retained set is an error.
pub fn estimate_spectrum(
    record: &ElevationRecord,
    amp_floor: f64,
    band: (f64, f64),
    gravity: f64,
) -> Result<ReconstructedSpectrum, Error> {
    let j = record.len();
    if j < 2 {
        return Err(Error::InvalidParameter(format!(
            "spectrum estimation needs at least 2 samples, got {j}"
        )));
    }
    let nyquist = PI / record.dt;
    if !(band.0 >= 0.0) || !(band.1 > band.0) || band.1 > nyquist * (1.0 + 1e-9) {
        return Err(Error::InvalidParameter(format!(
            "band {band:?} outside (0, {nyquist}]"
        )));
    }

    let mut buf: Vec<Complex<f64>> = record
        .samples
        .iter()
        .map(|&s| Complex::new(s, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(j).process(&mut buf);

    let jf = j as f64;
    let mut dc = buf[0].re / jf;
    if dc.abs() < amp_floor {
        dc = 0.0;
    }

    let half = j / 2;
    let d_omega = 2.0 * PI / (jf * record.dt);
    let mut components = Vec::new();
    for n in 1..=half {
        if j % 2 == 0 && n == half && 2 * n == j {
            // Nyquist bin appears once; no doubling.
        }
        let omega = n as f64 * d_omega;
        if omega < band.0 || omega > band.1 * (1.0 + 1e-12) {
            continue;
        }
        let scale = if j % 2 == 0 && n == half { 1.0 } else { 2.0 };
        let amplitude = scale * buf[n].norm() / jf;
        if amplitude < amp_floor || amplitude <= 0.0 {
            continue;
        }
        components.push(SpectralComponent {
            amplitude,
            phase: wrap_two_pi(-buf[n].arg()),
            angular_frequency: omega,
            wavenumber: omega * omega / gravity,
        });
    }
    if components.is_empty() {
        return Err(Error::NoPredictableComponents);
    }
    Ok(ReconstructedSpectrum {
        components,
        dc_offset: dc,
        t_ref: record.t_start,
        record_duration: jf * record.dt,
        amp_floor,
        band,
        gravity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const G: f64 = 9.81;

    fn record_from(f: impl Fn(f64) -> f64, j: usize, dt: f64, t0: f64) -> ElevationRecord {
        ElevationRecord {
            samples: (0..j).map(|i| f(t0 + i as f64 * dt)).collect(),
            dt,
            t_start: t0,
        }
    }

    #[test]
    fn on_grid_sinusoid_recovers_amplitude_and_phase() {
        // ζ = 1.5·cos(ω*t + 0.3) with ω* on the frequency grid.
        let j = 1000;
        let dt = 0.1;
        let omega = 2.0 * PI * 20.0 / (j as f64 * dt);
        let rec = record_from(|t| 1.5 * (omega * t + 0.3).cos(), j, dt, 0.0);
        let spec = estimate_spectrum(&rec, 0.1, (0.0, PI / dt), G).unwrap();
        assert_eq!(spec.components.len(), 1);
        let c = spec.components[0];
        assert!((1.485..=1.515).contains(&c.amplitude));
        assert_relative_eq!(c.angular_frequency, omega, max_relative = 1e-12);
        // cos(ωt + 0.3) = cos(−ωt − 0.3), so the stored phase is −0.3.
        let expected = wrap_two_pi(-0.3);
        let diff = (c.phase - expected + PI).rem_euclid(2.0 * PI) - PI;
        assert!(diff.abs() < 0.01, "phase diff {diff}");
    }

    #[test]
    fn zero_record_has_no_components() {
        let rec = record_from(|_| 0.0, 512, 0.1, 0.0);
        let err = estimate_spectrum(&rec, 1e-6, (0.0, PI / 0.1), G).unwrap_err();
        assert_eq!(err, Error::NoPredictableComponents);
    }

    #[test]
    fn parseval_energy_identity() {
        // Σ A²/2 over all retained bins (floor disabled) equals the record
        // variance.
        let j = 3000;
        let dt = 0.1;
        let rec = record_from(
            |t| {
                0.9 * (0.5 * t + 0.2).cos() + 0.4 * (1.13 * t + 2.0).cos() + 0.25 * (2.9 * t).cos()
            },
            j,
            dt,
            0.0,
        );
        let spec = estimate_spectrum(&rec, 0.0, (0.0, PI / dt), G).unwrap();
        let sum: f64 = spec
            .components
            .iter()
            .map(|c| 0.5 * c.amplitude * c.amplitude)
            .sum();
        assert_relative_eq!(sum, rec.variance(), max_relative = 1e-6);
    }

    #[test]
    fn region_two_component_reference_values() {
        let spec = ReconstructedSpectrum {
            components: vec![
                SpectralComponent {
                    amplitude: 1.0,
                    phase: 0.0,
                    angular_frequency: G / 10.0, // c = 10 m/s
                    wavenumber: (G / 10.0) * (G / 10.0) / G,
                },
                SpectralComponent {
                    amplitude: 1.0,
                    phase: 0.0,
                    angular_frequency: G / 5.0, // c = 5 m/s
                    wavenumber: (G / 5.0) * (G / 5.0) / G,
                },
            ],
            dc_offset: 0.0,
            t_ref: 0.0,
            record_duration: 300.0,
            amp_floor: 0.0,
            band: (0.0, 10.0),
            gravity: G,
        };
        let region = spec.predictable_region(50.0).unwrap();
        assert_relative_eq!(region.t_s, 10.0, epsilon = 1e-12);
        assert_relative_eq!(region.t_f, 305.0, epsilon = 1e-12);
    }

    #[test]
    fn region_single_component_duration_is_record_length() {
        let spec = ReconstructedSpectrum {
            components: vec![SpectralComponent {
                amplitude: 1.0,
                phase: 0.0,
                angular_frequency: 1.0,
                wavenumber: 1.0 / G,
            }],
            dc_offset: 0.0,
            t_ref: 7.0,
            record_duration: 120.0,
            amp_floor: 0.0,
            band: (0.0, 10.0),
            gravity: G,
        };
        let region = spec.predictable_region(42.0).unwrap();
        assert_relative_eq!(region.duration(), 120.0, epsilon = 1e-9);
    }

    #[test]
    fn narrowing_band_never_shrinks_region_duration() {
        let j = 2000;
        let dt = 0.1;
        let rec = record_from(
            |t| {
                (0.45 * t).cos() + 0.8 * (0.9 * t + 1.0).cos() + 0.5 * (1.7 * t + 0.4).cos()
                    + 0.3 * (2.6 * t + 2.2).cos()
            },
            j,
            dt,
            0.0,
        );
        let bands = [(0.3, 3.0), (0.4, 2.8), (0.6, 2.0), (0.8, 1.5)];
        let mut prev = f64::NEG_INFINITY;
        for b in bands {
            let spec = estimate_spectrum(&rec, 1e-3, b, G).unwrap();
            let dur = spec.predictable_region(50.0).unwrap().duration();
            assert!(
                dur >= prev - 1e-9,
                "duration {dur} shrank below {prev} for band {b:?}"
            );
            prev = dur;
        }
    }

    #[test]
    fn empty_region_error_when_band_too_wide() {
        // Slow component takes longer to arrive than the fast one takes to
        // run out: x / c_slow > T + x / c_fast.
        let spec = ReconstructedSpectrum {
            components: vec![
                SpectralComponent {
                    amplitude: 1.0,
                    phase: 0.0,
                    angular_frequency: 0.1,
                    wavenumber: 0.01 / G,
                },
                SpectralComponent {
                    amplitude: 1.0,
                    phase: 0.0,
                    angular_frequency: 60.0,
                    wavenumber: 3600.0 / G,
                },
            ],
            dc_offset: 0.0,
            t_ref: 0.0,
            record_duration: 1.0,
            amp_floor: 0.0,
            band: (0.0, 100.0),
            gravity: G,
        };
        assert!(matches!(
            spec.predictable_region(1000.0),
            Err(Error::EmptyPredictableRegion { .. })
        ));
    }

    #[test]
    fn round_trip_reproduces_record_at_measuring_point() {
        // Full-band, floor-disabled spectrum of an arbitrary record is a
        // DFT identity: re-synthesis at x = 0 matches every sample.
        let j = 1500;
        let dt = 0.1;
        let rec = record_from(
            |t| {
                0.7 * (0.513 * t + 0.11).cos()
                    + 0.45 * (1.071 * t + 2.9).cos()
                    + 0.2 * (2.313 * t + 4.4).cos()
                    + 0.05
            },
            j,
            dt,
            3.0,
        );
        let spec = estimate_spectrum(&rec, 0.0, (0.0, PI / dt), G).unwrap();
        let mut worst = 0.0_f64;
        for (i, &s) in rec.samples.iter().enumerate() {
            let t = rec.t_start + i as f64 * dt;
            let (zeta, _) = spec.predict_elevation(0.0, t, false);
            worst = worst.max((zeta - s).abs());
        }
        assert!(worst < 1e-8, "round-trip error {worst}");
    }

    #[test]
    fn floor_above_everything_leaves_empty_then_zero_prediction() {
        let rec = record_from(|t| 0.2 * (0.9 * t).cos(), 600, 0.1, 0.0);
        let err = estimate_spectrum(&rec, 10.0, (0.0, PI / 0.1), G).unwrap_err();
        assert_eq!(err, Error::NoPredictableComponents);
        // The predictor substitutes an empty spectrum in that case.
        let empty = ReconstructedSpectrum::empty(G);
        let (zeta, in_region) = empty.predict_elevation(50.0, 100.0, true);
        assert_eq!(zeta, 0.0);
        assert!(!in_region);
    }
}
