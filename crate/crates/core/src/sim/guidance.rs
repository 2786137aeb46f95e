//! Reference shaping for the vehicle and the fire-point estimator used by
//! endpoint tracking.

use crate::spatial::{wrap_angle, Vec3};

/// Smooth position reference chasing a goal with bounded speed and
/// acceleration. Its velocity and acceleration are the feed-forward for the
/// position loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceShaper {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Acceleration applied over the last step.
    pub acceleration: Vec3,
    pub yaw: f64,
}

impl ReferenceShaper {
    pub fn at(position: Vec3, yaw: f64) -> Self {
        Self { position, velocity: Vec3::zeros(), acceleration: Vec3::zeros(), yaw }
    }

    /// One step toward `goal`/`yaw_goal`.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        goal: &Vec3,
        yaw_goal: f64,
        gain: f64,
        max_speed: f64,
        max_accel: f64,
        yaw_rate: f64,
        dt: f64,
    ) {
        let mut v_cmd = (goal - self.position) * gain;
        let speed = v_cmd.norm();
        if speed > max_speed {
            v_cmd *= max_speed / speed;
        }
        let dv = v_cmd - self.velocity;
        let max_dv = max_accel * dt;
        let dv = if dv.norm() > max_dv { dv * (max_dv / dv.norm()) } else { dv };
        let v_next = self.velocity + dv;
        self.position += (self.velocity + v_next) * (0.5 * dt);
        self.velocity = v_next;
        self.acceleration = dv / dt;
        let dpsi = wrap_angle(yaw_goal - self.yaw);
        let step = yaw_rate * dt;
        self.yaw = wrap_angle(self.yaw + dpsi.clamp(-step, step));
    }
}

/// Alpha-beta tracker of a point in Σ_I sampled at irregular times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointTracker {
    pub alpha: f64,
    pub beta: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub time: f64,
    initialised: bool,
}

impl PointTracker {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, position: Vec3::zeros(), velocity: Vec3::zeros(), time: 0.0, initialised: false }
    }

    pub fn is_initialised(&self) -> bool {
        self.initialised
    }

    pub fn update(&mut self, z: &Vec3, t: f64) {
        if !self.initialised {
            *self = Self { position: *z, velocity: Vec3::zeros(), time: t, initialised: true, ..*self };
            return;
        }
        let dt = t - self.time;
        if dt <= 0.0 {
            return;
        }
        let predicted = self.position + self.velocity * dt;
        let r = z - predicted;
        self.position = predicted + r * self.alpha;
        self.velocity += r * (self.beta / dt);
        self.time = t;
    }

    /// Extrapolated position at `t`.
    pub fn predict(&self, t: f64) -> Vec3 {
        self.position + self.velocity * (t - self.time)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn shaper_respects_limits_and_arrives() {
        let mut s = ReferenceShaper::at(Vec3::zeros(), 0.0);
        let goal = Vec3::new(3.0, 0.0, -1.0);
        let dt = 0.01;
        let mut prev = s.velocity;
        for _ in 0..3000 {
            s.step(&goal, 1.0, 1.0, 0.8, 0.5, 0.35, dt);
            assert!(s.velocity.norm() <= 0.8 + 1e-9);
            assert!((s.velocity - prev).norm() <= 0.5 * dt + 1e-12);
            prev = s.velocity;
        }
        assert_relative_eq!(s.position, goal, epsilon = 1e-3);
        assert_relative_eq!(s.yaw, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tracker_locks_onto_constant_velocity() {
        let mut f = PointTracker::new(0.5, 0.1);
        let v = Vec3::new(0.1, -0.05, 0.02);
        for k in 0..400 {
            let t = k as f64 * 0.04;
            f.update(&(Vec3::new(1.0, 2.0, 3.0) + v * t), t);
        }
        assert_relative_eq!(f.velocity, v, epsilon = 1e-9);
        let t = 399.0 * 0.04;
        assert_relative_eq!(f.predict(t + 0.04), Vec3::new(1.0, 2.0, 3.0) + v * (t + 0.04), epsilon = 1e-9);
    }
}
