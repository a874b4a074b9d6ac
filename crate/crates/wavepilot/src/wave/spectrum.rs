//! Spectral synthesis of irregular seas.
//!
//! The spectral density is discretized into equal-width frequency bins over
//! [0.4·ωp, 4·ωp]; each bin becomes one monochromatic component with
//! H = 2·√(2·S(ω)·Δω) and the densities are rescaled so the recovered
//! significant wave height matches the requested one through the m₀ identity
//! Hs = 4·√m₀. Phases come from a seeded generator so every synthesis is
//! reproducible bit for bit.

use super::{solve_dispersion, SeaState, WaveComponent};
use crate::error::Error;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumShape {
    /// Peaked spectrum with enhancement factor γ = 3.3.
    Jonswap,
    /// Fully developed sea (the γ = 1 limit of the same family).
    PiersonMoskowitz,
}

/// Statistical description of a sea to synthesize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    /// Significant wave height Hs (m).
    pub significant_wave_height: f64,
    /// Peak spectral period Tp (s).
    pub peak_period: f64,
    /// Number of monochromatic components.
    pub component_count: usize,
    /// Seed for the phase generator.
    pub rng_seed: u64,
    pub shape: SpectrumShape,
}

impl SpectrumSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.significant_wave_height > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Hs must be > 0, got {}",
                self.significant_wave_height
            )));
        }
        if !(self.peak_period > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Tp must be > 0, got {}",
                self.peak_period
            )));
        }
        if self.component_count < 1 {
            return Err(Error::InvalidParameter(
                "component count must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Unnormalized spectral density shape at ω for peak frequency ωp.
/// The absolute scale cancels in the Hs normalization.
fn density_shape(omega: f64, omega_p: f64, gamma: f64) -> f64 {
    let sigma = if omega <= omega_p { 0.07 } else { 0.09 };
    let r = (-((omega - omega_p) * (omega - omega_p))
        / (2.0 * sigma * sigma * omega_p * omega_p))
        .exp();
    let base = omega.powi(-5) * (-1.25 * (omega_p / omega).powi(4)).exp();
    base * gamma.powf(r)
}

/// Synthesize a ground-truth sea at depth `d` from a statistical spec.
pub fn synthesize_sea(spec: &SpectrumSpec, depth: f64, gravity: f64) -> Result<SeaState, Error> {
    spec.validate()?;
    let n = spec.component_count;
    let omega_p = 2.0 * PI / spec.peak_period;
    let lo = 0.4 * omega_p;
    let hi = 4.0 * omega_p;
    let d_omega = (hi - lo) / n as f64;
    let gamma = match spec.shape {
        SpectrumShape::Jonswap => 3.3,
        SpectrumShape::PiersonMoskowitz => 1.0,
    };

    // Bin-center frequencies and raw densities.
    let omegas: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * d_omega).collect();
    let raw: Vec<f64> = omegas
        .iter()
        .map(|&w| density_shape(w, omega_p, gamma))
        .collect();
    let m0_raw: f64 = raw.iter().map(|s| s * d_omega).sum();
    if !(m0_raw > 0.0) {
        return Err(Error::InvalidParameter(
            "spectral density integrated to zero".into(),
        ));
    }
    // Exact m₀ normalization: Σ (Hᵢ/2)²/2 = (Hs/4)².
    let target_m0 = (spec.significant_wave_height / 4.0).powi(2);
    let scale = target_m0 / m0_raw;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut components = Vec::with_capacity(n);
    for (i, &omega) in omegas.iter().enumerate() {
        let height = 2.0 * (2.0 * raw[i] * scale * d_omega).sqrt();
        let phase = rng.gen_range(0.0..2.0 * PI);
        let kappa = solve_dispersion(omega, depth, gravity)?;
        components.push(WaveComponent {
            height,
            angular_frequency: omega,
            wavenumber: kappa,
            phase,
            deep_water: false,
        });
    }
    SeaState::new(components, depth, gravity)
}
