//! Low-order wave load estimate: added-inertia plus drag forcing from the
//! fluid particle kinematics, with the pitch moment recovered by a strip
//! integral of the heave row along the body.

use super::{GeneralizedForce, VehicleParams};
use crate::error::Error;
use crate::wave::ParticleKinematics;

/// Surge and heave load rows at one point, from body-frame particle velocity
/// `(vx, vz)` and acceleration `(ax, az)`. `rel` optionally subtracts the
/// vehicle body velocity from the drag term.
pub fn wave_load_point(
    p: &VehicleParams,
    vx: f64,
    vz: f64,
    ax: f64,
    az: f64,
    rel: Option<(f64, f64)>,
) -> (f64, f64) {
    let (dx, dz) = match rel {
        Some((u, w)) => (vx - u, vz - w),
        None => (vx, vz),
    };
    let x_e = p.added_mass_surge * ax + (p.linear_drag_surge + p.quad_drag_surge * dx.abs()) * dx;
    let z_e = p.added_mass_heave * az + (p.linear_drag_heave + p.quad_drag_heave * dz.abs()) * dz;
    (x_e, z_e)
}

/// Generalized wave load at a vehicle pose.
///
/// `kinematics` maps an earth-frame point (x, z) to the fluid particle
/// velocity/acceleration there; the same code therefore serves both the true
/// sea and a reconstructed spectrum. Kinematics are rotated into the body
/// frame before the load rows are formed. The pitch moment discretizes
/// ∫ Z_E(x′)·x′ dx′ over x′ ∈ [−L/2, L/2] with a midpoint rule, each strip
/// evaluated at its own earth-frame position.
///
/// `vehicle_nu` supplies body-frame (u, w) for the relative-velocity drag
/// variant; it is ignored unless `p.relative_drag` is set.
pub fn wave_load(
    p: &VehicleParams,
    x: f64,
    z: f64,
    theta: f64,
    vehicle_nu: Option<(f64, f64)>,
    kinematics: &dyn Fn(f64, f64) -> Result<ParticleKinematics, Error>,
) -> Result<GeneralizedForce, Error> {
    let (sin_t, cos_t) = theta.sin_cos();
    // Earth -> body for planar vectors.
    let to_body = |ex: f64, ez: f64| (ex * cos_t - ez * sin_t, ex * sin_t + ez * cos_t);
    let rel = if p.relative_drag { vehicle_nu } else { None };

    let center = kinematics(x, z)?;
    let (vx, vz) = to_body(center.u, center.w);
    let (ax, az) = to_body(center.du, center.dw);
    let (x_e, z_e) = wave_load_point(p, vx, vz, ax, az, rel);

    let n = p.strip_count;
    let width = p.body_length / n as f64;
    let mut moment = 0.0;
    for s in 0..n {
        let x_local = -0.5 * p.body_length + (s as f64 + 0.5) * width;
        // Strip position in the earth frame.
        let sx = x + x_local * cos_t;
        let sz = z - x_local * sin_t;
        let kin = kinematics(sx, sz)?;
        let (svx, svz) = to_body(kin.u, kin.w);
        let (sax, saz) = to_body(kin.du, kin.dw);
        let (_, strip_z) = wave_load_point(p, svx, svz, sax, saz, rel);
        moment += strip_z * x_local * width;
    }

    Ok(GeneralizedForce::new(x_e, z_e, moment))
}
