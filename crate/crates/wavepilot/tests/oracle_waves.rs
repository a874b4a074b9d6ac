//! Independent-oracle checks for the wave field: a bisection dispersion
//! solver, literal term-by-term re-evaluations of the elevation and
//! kinematics sums, and finite differences for the accelerations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use wavepilot::wave::{
    solve_dispersion, synthesize_sea, SeaState, SpectrumShape, SpectrumSpec, WaveComponent,
};

const G: f64 = 9.81;

/// Bisection over [1e-6, 10] on f(κ) = ω² − gκ·tanh(κd).
fn bisection_dispersion(omega: f64, depth: f64) -> f64 {
    let f = |k: f64| omega * omega - G * k * (k * depth).tanh();
    let mut lo = 1e-6;
    let mut hi = 10.0;
    assert!(f(lo) > 0.0 && f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn newton_dispersion_matches_bisection_oracle() {
    // The second sea case's peak frequency at the site depth.
    let omega = 2.0 * PI / 9.5;
    let newton = solve_dispersion(omega, 54.0, G).unwrap();
    let oracle = bisection_dispersion(omega, 54.0);
    assert!(
        (newton - oracle).abs() < 1e-8,
        "newton {newton} vs bisection {oracle}"
    );
}

fn three_component_sea() -> SeaState {
    let components = vec![
        WaveComponent::with_dispersion(1.2, 0.7, 0.3, 54.0, G).unwrap(),
        WaveComponent::with_dispersion(0.8, 1.1, 2.1, 54.0, G).unwrap(),
        WaveComponent::with_dispersion(0.4, 1.9, 5.5, 54.0, G).unwrap(),
    ];
    SeaState::new(components, 54.0, G).unwrap()
}

/// Literal Eq.-for-eq. re-evaluation of the elevation sum.
fn elevation_oracle(sea: &SeaState, x: f64, t: f64) -> f64 {
    let mut zeta = 0.0;
    for c in &sea.components {
        let a = 0.5 * c.height;
        let th = c.wavenumber * x - c.angular_frequency * t + c.phase;
        zeta += a * th.cos();
        if sea.second_order {
            zeta += 0.5 * c.wavenumber * a * a * (2.0 * th).cos();
        }
    }
    zeta
}

/// Literal re-evaluation of the velocity sums with direct hyperbolics.
fn velocity_oracle(sea: &SeaState, x: f64, z: f64, t: f64) -> (f64, f64) {
    let mut u = 0.0;
    let mut w = 0.0;
    for c in &sea.components {
        let k = c.wavenumber;
        let om = c.angular_frequency;
        let cel = om / k;
        let th = k * x - om * t + c.phase;
        let first = G * c.height / (2.0 * cel);
        u += first * ((k * (z + sea.depth)).cosh() / (k * sea.depth).cosh()) * th.cos();
        w += first * ((k * (z + sea.depth)).sinh() / (k * sea.depth).cosh()) * th.sin();
        if sea.second_order {
            let second = (3.0 / 16.0) * cel * k * k * c.height * c.height;
            let denom = (k * sea.depth).sinh().powi(4);
            u += second * ((2.0 * k * (z + sea.depth)).cosh() / denom) * (2.0 * th).cos();
            w += second * ((2.0 * k * (z + sea.depth)).sinh() / denom) * (2.0 * th).sin();
        }
    }
    (u, w)
}

#[test]
fn elevation_matches_term_by_term_oracle() {
    let sea = three_component_sea();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let x = rng.gen_range(-100.0..100.0);
        let t = rng.gen_range(0.0..600.0);
        let diff = (sea.elevation(x, t) - elevation_oracle(&sea, x, t)).abs();
        assert!(diff < 1e-12, "elevation mismatch {diff} at ({x}, {t})");
    }
}

#[test]
fn velocity_matches_term_by_term_oracle_at_w2_conditions() {
    let spec = SpectrumSpec {
        significant_wave_height: 3.47,
        peak_period: 9.5,
        component_count: 64,
        rng_seed: 42,
        shape: SpectrumShape::Jonswap,
    };
    let sea = synthesize_sea(&spec, 54.0, G).unwrap();
    let (u, w) = sea.particle_velocity(50.0, -5.0, 310.0).unwrap();
    let (uo, wo) = velocity_oracle(&sea, 50.0, -5.0, 310.0);
    assert!((u - uo).abs() < 1e-10, "u {u} vs oracle {uo}");
    assert!((w - wo).abs() < 1e-10, "w {w} vs oracle {wo}");
}

#[test]
fn acceleration_matches_finite_difference_of_velocity() {
    let sea = three_component_sea();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let dt = 1e-4;
    for _ in 0..100 {
        let x = rng.gen_range(-50.0..50.0);
        let z = rng.gen_range(-54.0..0.0);
        let t = rng.gen_range(0.0..300.0);
        let (du, dw) = sea.particle_acceleration(x, z, t).unwrap();
        let (u1, w1) = sea.particle_velocity(x, z, t - dt).unwrap();
        let (u2, w2) = sea.particle_velocity(x, z, t + dt).unwrap();
        let fd_u = (u2 - u1) / (2.0 * dt);
        let fd_w = (w2 - w1) / (2.0 * dt);
        assert!((du - fd_u).abs() < 1e-5, "du {du} vs fd {fd_u}");
        assert!((dw - fd_w).abs() < 1e-5, "dw {dw} vs fd {fd_w}");
    }
}
