use crate::spatial::{e3, rot_yaw, Pose, RotationMatrix, Vec3};
use nalgebra::Unit;

/// Moving base carrying the target torch: a vertical sinusoid with an
/// attitude swing proportional to the height offset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloatingPlatform {
    /// m
    pub amplitude: f64,
    /// rad/s
    pub angular_frequency: f64,
    /// Swing angle per metre of height offset, rad/m.
    pub swing_gain: f64,
    /// Swing axis in the target frame.
    pub swing_axis: Vec3,
    /// Distance from the torch tip down to the swing pivot, m.
    pub pivot_depth: f64,
    /// Target torch pose at rest (target frame to Σ_I).
    pub base: Pose,
}

impl FloatingPlatform {
    /// A platform that never moves.
    pub fn fixed(base: Pose) -> Self {
        Self {
            amplitude: 0.0,
            angular_frequency: 0.0,
            swing_gain: 0.0,
            swing_axis: Vec3::x(),
            pivot_depth: 0.0,
            base,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.amplitude >= 0.0) {
            return Err("platform amplitude must be >= 0".into());
        }
        if !(self.angular_frequency >= 0.0 && self.pivot_depth >= 0.0 && self.swing_gain.is_finite()) {
            return Err("platform frequency and pivot depth must be >= 0".into());
        }
        if self.swing_gain != 0.0 && !(self.swing_axis.norm() > 0.0) {
            return Err("swing axis must be non-zero".into());
        }
        Ok(())
    }

    /// Height offset above the base, m (positive is up).
    pub fn height(&self, t: f64) -> f64 {
        self.amplitude * (self.angular_frequency * t).sin()
    }
}

/// Target torch pose (target frame to Σ_I) at time `t`.
pub fn platform_pose(t: f64, platform: &FloatingPlatform) -> Pose {
    let h = platform.height(t);
    let swing = platform.swing_gain * h;
    let r_swing = if swing == 0.0 {
        RotationMatrix::identity()
    } else {
        RotationMatrix::from_axis_angle(&Unit::new_normalize(platform.swing_axis), swing)
    };
    let base = &platform.base;
    let down = Vec3::new(0.0, 0.0, platform.pivot_depth);
    let pivot = base.translation + base.rotation * down - e3() * h;
    let rotation = base.rotation * r_swing;
    Pose::new(rotation, pivot - rotation * down)
}

/// Target base at `position` with heading `yaw`, level.
pub fn level_pose(position: Vec3, yaw: f64) -> Pose {
    Pose::new(rot_yaw(yaw), position)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::rotation_distance;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn platform() -> FloatingPlatform {
        FloatingPlatform {
            amplitude: 0.05,
            angular_frequency: PI / 5.0,
            swing_gain: 2.5,
            swing_axis: Vec3::x(),
            pivot_depth: 0.8,
            base: level_pose(Vec3::new(5.0, 1.0, -1.6), 0.3),
        }
    }

    #[test]
    fn starts_at_base() {
        let p = platform();
        let pose = platform_pose(0.0, &p);
        assert_relative_eq!(pose.translation, p.base.translation, epsilon = 1e-15);
        assert!(rotation_distance(&pose.rotation, &p.base.rotation) < 1e-15);
    }

    #[test]
    fn peak_and_period() {
        let p = FloatingPlatform { swing_gain: 0.0, ..platform() };
        let up = platform_pose(2.5, &p);
        assert_relative_eq!(up.translation, p.base.translation - e3() * 0.05, epsilon = 1e-15);
        let down = platform_pose(7.5, &p);
        assert_relative_eq!(down.translation.z - up.translation.z, 0.10, epsilon = 1e-15);
        assert_relative_eq!(platform_pose(10.0, &p).translation, p.base.translation, epsilon = 1e-14);
    }

    #[test]
    fn swing_moves_tip_sideways_about_pivot() {
        let p = platform();
        let pose = platform_pose(2.5, &p);
        let angle = 2.5 * 0.05;
        assert_relative_eq!(rotation_distance(&pose.rotation, &p.base.rotation), angle, epsilon = 1e-12);
        // pivot stays on the vertical through the base pivot
        let pivot = pose.translation + pose.rotation * Vec3::new(0.0, 0.0, 0.8);
        let base_pivot = p.base.translation + Vec3::new(0.0, 0.0, 0.8) - e3() * 0.05;
        assert_relative_eq!(pivot, base_pivot, epsilon = 1e-14);
        let lateral = (pose.translation - p.base.translation).xy().norm();
        assert_relative_eq!(lateral, 0.8 * angle.sin(), epsilon = 1e-12);
    }

    #[test]
    fn fixed_platform_never_moves() {
        let p = FloatingPlatform::fixed(platform().base);
        for t in [0.0, 1.3, 7.7, 100.0] {
            assert_eq!(platform_pose(t, &p), p.base);
        }
    }
}
