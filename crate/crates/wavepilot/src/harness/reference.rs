//! Reference trajectory for the square tracking mission: uniformly spaced
//! waypoints along the four legs (forward, up, back, down), traversed at
//! constant speed over the tracking phase, with zero reference pitch
//! throughout and reference velocities recovered by finite difference.

use super::config::MissionSpec;
use nalgebra::{Vector3, Vector6};

#[derive(Debug, Clone)]
pub struct ReferenceTrajectory {
    /// Pose per step, starting at the tracking-phase start.
    poses: Vec<Vector3<f64>>,
    /// Earth-frame velocity per step, forward difference of the poses. With
    /// zero reference pitch these equal the body-frame reference velocities.
    velocities: Vec<Vector3<f64>>,
    t_start: f64,
    dt: f64,
}

impl ReferenceTrajectory {
    pub fn generate(spec: &MissionSpec) -> Self {
        let start = Vector3::from(spec.start);
        let side = spec.side_length;
        // Corners of the square: forward (+x), up (+z), back (−x), down (−z).
        let corners = [
            start,
            start + Vector3::new(side, 0.0, 0.0),
            start + Vector3::new(side, side, 0.0),
            start + Vector3::new(0.0, side, 0.0),
            start,
        ];
        // Uniformly spaced waypoints between the corners.
        let mut waypoints: Vec<Vector3<f64>> = vec![corners[0]];
        for leg in 0..4 {
            let a = corners[leg];
            let b = corners[leg + 1];
            let len = (b - a).norm();
            let n = (len / spec.waypoint_spacing).ceil().max(1.0) as usize;
            for i in 1..=n {
                waypoints.push(a + (b - a) * (i as f64 / n as f64));
            }
        }
        // Cumulative arc length over the waypoint polyline.
        let mut cumulative = Vec::with_capacity(waypoints.len());
        let mut s = 0.0;
        cumulative.push(0.0);
        for w in 1..waypoints.len() {
            s += (waypoints[w] - waypoints[w - 1]).norm();
            cumulative.push(s);
        }
        let total_length = s;

        let duration = spec.tracking_duration();
        let n_steps = (duration / spec.dt).round() as usize;
        let speed = total_length / duration;

        // Pose sampled every dt at constant speed along the polyline; a tail
        // of horizon length keeps lookups past the mission end well defined.
        let tail = 64;
        let mut poses = Vec::with_capacity(n_steps + tail + 2);
        let mut seg = 0usize;
        for k in 0..=(n_steps + tail) {
            let arc = (speed * k as f64 * spec.dt).min(total_length);
            while seg + 1 < cumulative.len() - 1 && cumulative[seg + 1] < arc {
                seg += 1;
            }
            let span = cumulative[seg + 1] - cumulative[seg];
            let frac = if span > 0.0 {
                ((arc - cumulative[seg]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let p = waypoints[seg] + (waypoints[seg + 1] - waypoints[seg]) * frac;
            poses.push(Vector3::new(p[0], p[1], 0.0));
        }
        let mut velocities = Vec::with_capacity(poses.len());
        for k in 0..poses.len() {
            if k + 1 < poses.len() {
                velocities.push((poses[k + 1] - poses[k]) / spec.dt);
            } else {
                velocities.push(Vector3::zeros());
            }
        }
        Self {
            poses,
            velocities,
            t_start: spec.record_duration,
            dt: spec.dt,
        }
    }

    fn index(&self, t: f64) -> usize {
        if t <= self.t_start {
            return 0;
        }
        let k = ((t - self.t_start) / self.dt).round() as usize;
        k.min(self.poses.len() - 1)
    }

    /// Reference pose at time t (clamped to the path ends; before the
    /// tracking phase this is the start pose, for station keeping).
    pub fn pose(&self, t: f64) -> Vector3<f64> {
        self.poses[self.index(t)]
    }

    pub fn velocity(&self, t: f64) -> Vector3<f64> {
        if t < self.t_start {
            return Vector3::zeros();
        }
        self.velocities[self.index(t)]
    }

    /// Stacked reference state [η_r, ν_r] at time t.
    pub fn state(&self, t: f64) -> Vector6<f64> {
        let p = self.pose(t);
        let v = self.velocity(t);
        Vector6::new(p[0], p[1], p[2], v[0], v[1], v[2])
    }

    /// Total path length across the four legs.
    pub fn path_length(&self) -> f64 {
        let mut s = 0.0;
        for k in 1..self.poses.len() {
            s += (self.poses[k] - self.poses[k - 1]).norm();
        }
        s
    }
}
