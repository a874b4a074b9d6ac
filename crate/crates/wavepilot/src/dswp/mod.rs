//! Fixed-point deterministic sea wave prediction.
//!
//! Surface elevation is recorded at a measuring point for a period T_M,
//! decomposed into a bounded one-sided spectrum, and propagated in space by
//! the deep-water phase filter k_n = ω_n²/g. The travel times of the slowest
//! and fastest retained components bound the window over which predictions
//! at a downstream point are physically valid; within it the reconstruction
//! also yields particle kinematics and hence previews of the generalized
//! wave loads.
//!
//! Recording is single-writer; estimation and prediction run on immutable
//! snapshots and may be called concurrently between writes.

mod buffer;
mod predictor;
mod spectrum;

pub use buffer::{ElevationBuffer, ElevationRecord};
pub use predictor::{DisturbancePreview, DswpConfig, WavePredictor};
pub use spectrum::{
    estimate_spectrum, PredictableRegion, ReconstructedSpectrum, SpectralComponent,
};
