//! Arm geometry: a shoulder-roll / shoulder-pitch / elbow-pitch chain with the
//! torch rigidly attached to the last link.
//!
//! Joint table, all expressed in the manipulator base frame Σ_M
//! (forward-left-up with the default mount):
//!
//! | step | transform        | meaning                                   |
//! |------|------------------|-------------------------------------------|
//! | 1    | `Rx(q1)`         | shoulder roll about `x_M`                 |
//! | 2    | `Tx(L1) Ry(q2)`  | link 1, then shoulder pitch               |
//! | 3    | `Tx(L2) Ry(q3)`  | link 2 (upper arm), then elbow pitch      |
//! | 4    | `Tx(L3) Ry(pi - alpha)` | forearm, then fixed torch bend     |
//! | 5    | `Tx(L4)`         | torch link to the tip                     |
//!
//! `Ry(+a)` tilts a link's x axis toward `-z_M`, so positive pitch points the
//! arm downward. With `alpha = 135 deg` the torch is bent 45 deg below the
//! forearm axis.

use nalgebra::SVD;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spatial::{rot_x, rot_y, Mat3, RotationMatrix, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("joint {joint} angle {value} rad outside [{lo}, {hi}]")]
    JointLimit { joint: usize, value: f64, lo: f64, hi: f64 },
    #[error("target {0:?} not reachable within joint limits (residual {1:.3e} m)")]
    Unreachable([f64; 3], f64),
}

/// Arm joint angles (shoulder roll, shoulder pitch, elbow pitch), rad.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub angles: Vec3,
}

impl JointState {
    pub fn new(roll: f64, pitch: f64, elbow: f64) -> Self {
        Self { angles: Vec3::new(roll, pitch, elbow) }
    }

    pub fn zero() -> Self {
        Self { angles: Vec3::zeros() }
    }
}

impl From<Vec3> for JointState {
    fn from(angles: Vec3) -> Self {
        Self { angles }
    }
}

/// Damped-least-squares tuning for [`ManipulatorConfig::inverse_velocity`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampingConfig {
    /// Full damping applied at an exact singularity, m.
    pub lambda: f64,
    /// Damping switches on below this smallest singular value.
    pub sigma_threshold: f64,
}

/// Geometry of the arm and of the mount between Σ_B and Σ_M. Lengths in m,
/// angles in rad.
#[derive(Clone, Debug, PartialEq)]
pub struct ManipulatorConfig {
    pub base_offset: f64,
    pub link_lengths: [f64; 4],
    /// Intersection angle between forearm and torch.
    pub torch_angle: f64,
    pub camera_pitch: f64,
    pub camera_yaw: f64,
    /// Σ_M to Σ_B.
    pub r_bm: RotationMatrix,
    /// Origin of Σ_M in Σ_B.
    pub p_bm: Vec3,
    pub joint_limits: [(f64, f64); 3],
    /// Per-joint speed limit, rad/s.
    pub rate_limits: Vec3,
    pub damping: DampingConfig,
}

impl Default for ManipulatorConfig {
    fn default() -> Self {
        Self::from_table(300.0, [100.0, 400.0, 200.0, 530.0], 135.0, -30.0, -60.0, 950.0)
    }
}

/// One rigid link: frame at its proximal joint, extending along local x.
#[derive(Clone, Copy, Debug)]
pub struct LinkPose {
    pub rotation: RotationMatrix,
    pub origin: Vec3,
    pub length: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ChainPose {
    pub links: [LinkPose; 4],
    pub tip: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseVelocity {
    pub qdot: Vec3,
    pub sigma_min: f64,
    /// Damped least squares was active.
    pub damped: bool,
    /// The raw solution exceeded a joint rate limit and was scaled down.
    pub rate_limited: bool,
}

impl ManipulatorConfig {
    /// Builds the config from table units (mm, deg). `r_max_mm` sets the
    /// damping scale (`lambda = 0.01 * r_max`).
    pub fn from_table(
        d_mm: f64,
        links_mm: [f64; 4],
        alpha_deg: f64,
        phi_c_deg: f64,
        theta_c_deg: f64,
        r_max_mm: f64,
    ) -> Self {
        let half_pi = std::f64::consts::FRAC_PI_2;
        Self {
            base_offset: d_mm * 1e-3,
            link_lengths: links_mm.map(|l| l * 1e-3),
            torch_angle: alpha_deg.to_radians(),
            camera_pitch: phi_c_deg.to_radians(),
            camera_yaw: theta_c_deg.to_radians(),
            r_bm: default_mount_rotation(),
            p_bm: Vec3::new(d_mm * 1e-3, 0.0, 0.0),
            joint_limits: [(-half_pi, half_pi); 3],
            rate_limits: Vec3::repeat(2.0),
            damping: DampingConfig { lambda: 0.01 * r_max_mm * 1e-3, sigma_threshold: 1e-3 },
        }
    }

    /// Bend of the torch below the forearm axis.
    pub fn torch_bend(&self) -> f64 {
        std::f64::consts::PI - self.torch_angle
    }

    pub fn check_limits(&self, q: &JointState) -> Result<(), KinematicsError> {
        for (i, &(lo, hi)) in self.joint_limits.iter().enumerate() {
            let value = q.angles[i];
            if !(value >= lo && value <= hi) {
                return Err(KinematicsError::JointLimit { joint: i + 1, value, lo, hi });
            }
        }
        Ok(())
    }

    pub fn clamp_to_limits(&self, q: &JointState) -> JointState {
        let mut a = q.angles;
        for (i, &(lo, hi)) in self.joint_limits.iter().enumerate() {
            a[i] = a[i].clamp(lo, hi);
        }
        JointState { angles: a }
    }

    pub fn chain(&self, q: &JointState) -> ChainPose {
        let [l1, l2, l3, l4] = self.link_lengths;
        let r1 = rot_x(q.angles[0]);
        let o1 = Vec3::zeros();
        let r2 = r1 * rot_y(q.angles[1]);
        let o2 = o1 + r1 * Vec3::new(l1, 0.0, 0.0);
        let r3 = r2 * rot_y(q.angles[2]);
        let o3 = o2 + r2 * Vec3::new(l2, 0.0, 0.0);
        let r4 = r3 * rot_y(self.torch_bend());
        let o4 = o3 + r3 * Vec3::new(l3, 0.0, 0.0);
        let tip = o4 + r4 * Vec3::new(l4, 0.0, 0.0);
        ChainPose {
            links: [
                LinkPose { rotation: r1, origin: o1, length: l1 },
                LinkPose { rotation: r2, origin: o2, length: l2 },
                LinkPose { rotation: r3, origin: o3, length: l3 },
                LinkPose { rotation: r4, origin: o4, length: l4 },
            ],
            tip,
        }
    }

    /// Torch tip in Σ_M without the joint-limit check.
    pub fn tip(&self, q: &JointState) -> Vec3 {
        self.chain(q).tip
    }

    /// Torch tip position in Σ_M.
    pub fn forward_kinematics(&self, q: &JointState) -> Result<Vec3, KinematicsError> {
        self.check_limits(q)?;
        Ok(self.tip(q))
    }

    /// Joint axes and pivot points in Σ_M, in joint order.
    pub fn joint_axes(&self, q: &JointState) -> [(Vec3, Vec3); 3] {
        let c = self.chain(q);
        let a1 = Vec3::x();
        let a2 = c.links[0].rotation * Vec3::y();
        [(a1, c.links[0].origin), (a2, c.links[1].origin), (a2, c.links[2].origin)]
    }

    /// Linear-velocity Jacobian of the tip, Σ_M.
    pub fn jacobian(&self, q: &JointState) -> Mat3 {
        let tip = self.tip(q);
        let axes = self.joint_axes(q);
        Mat3::from_columns(&axes.map(|(a, o)| a.cross(&(tip - o))))
    }

    /// Joint rates that realise `v_des` (Σ_M) at the tip.
    ///
    /// Exact inverse while the smallest singular value stays above the
    /// threshold; below it the damping grows smoothly as
    /// `lambda^2 * (1 - (sigma_min / threshold)^2)`, so the output is
    /// continuous across the switch. The result is then scaled down
    /// uniformly if any joint exceeds its rate limit.
    pub fn inverse_velocity(&self, q: &JointState, v_des: &Vec3) -> InverseVelocity {
        let svd = SVD::new(self.jacobian(q), true, true);
        let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        let sigma = svd.singular_values;
        let sigma_min = sigma.min();
        let DampingConfig { lambda, sigma_threshold } = self.damping;
        let damped = sigma_min < sigma_threshold;
        let damping_sq = if damped {
            lambda * lambda * (1.0 - (sigma_min / sigma_threshold).powi(2))
        } else {
            0.0
        };
        let projected = u.transpose() * v_des;
        let mut scaled = Vec3::zeros();
        for i in 0..3 {
            let s = sigma[i];
            let gain = if damped { s / (s * s + damping_sq) } else { 1.0 / s };
            scaled[i] = gain * projected[i];
        }
        let mut qdot = v_t.transpose() * scaled;
        let ratio = qdot.component_div(&self.rate_limits).abs().max();
        let rate_limited = ratio > 1.0;
        if rate_limited {
            qdot /= ratio;
        }
        InverseVelocity { qdot, sigma_min, damped, rate_limited }
    }

    /// Tip position of the arm relative to the Σ_B origin, expressed in Σ_B.
    pub fn tip_in_body(&self, q: &JointState) -> Vec3 {
        self.p_bm + self.r_bm * self.tip(q)
    }

    /// Σ_M to Σ_B for a point.
    pub fn manip_to_body(&self, p_m: &Vec3) -> Vec3 {
        self.p_bm + self.r_bm * p_m
    }

    /// Σ_B to Σ_M for a point.
    pub fn body_to_manip(&self, p_b: &Vec3) -> Vec3 {
        self.r_bm.transpose() * (p_b - self.p_bm)
    }

    /// Tip position in Σ_I.
    pub fn endpoint_world(&self, p_b: &Vec3, r_ib: &RotationMatrix, q: &JointState) -> Vec3 {
        p_b + r_ib * self.tip_in_body(q)
    }

    /// Tip velocity in Σ_I.
    #[allow(clippy::too_many_arguments)]
    pub fn endpoint_velocity_world(
        &self,
        v_b: &Vec3,
        r_ib: &RotationMatrix,
        omega_b: &Vec3,
        q: &JointState,
        qdot: &Vec3,
    ) -> Vec3 {
        let lever = self.tip_in_body(q);
        v_b + r_ib * (omega_b.cross(&lever) + self.r_bm * (self.jacobian(q) * qdot))
    }

    /// Tip velocity in Σ_M that makes the world-frame tip velocity equal
    /// `v_end_d` given the current vehicle motion.
    pub fn desired_endpoint_body_velocity(
        &self,
        v_end_d: &Vec3,
        v_b: &Vec3,
        r_ib: &RotationMatrix,
        omega_b: &Vec3,
        q: &JointState,
    ) -> Vec3 {
        let lever = self.tip_in_body(q);
        let body = r_ib.transpose() * (v_end_d - v_b) - omega_b.cross(&lever);
        self.r_bm.transpose() * body
    }

    /// Position-level IK by iterating the damped inverse from `seed`.
    pub fn solve_position(
        &self,
        target: &Vec3,
        seed: &JointState,
    ) -> Result<JointState, KinematicsError> {
        let mut q = self.clamp_to_limits(seed);
        let mut residual = f64::INFINITY;
        for _ in 0..200 {
            let err = target - self.tip(&q);
            residual = err.norm();
            if residual < 1e-12 {
                break;
            }
            let j = self.jacobian(&q);
            let jt = j.transpose();
            let damping = Mat3::identity() * 1e-6;
            let step = jt * (j * jt + damping).try_inverse().unwrap_or_else(Mat3::zeros) * err;
            q = self.clamp_to_limits(&JointState { angles: q.angles + step });
        }
        if residual < 1e-9 {
            Ok(q)
        } else {
            Err(KinematicsError::Unreachable([target.x, target.y, target.z], residual))
        }
    }
}

/// Σ_M is forward-left-up while Σ_B is forward-right-down: a half turn
/// about x.
pub fn default_mount_rotation() -> RotationMatrix {
    rot_x(std::f64::consts::PI)
}

/// Fan-shaped task region around `z_M`. SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub height: f64,
    /// Full opening angle of the fan, rad.
    pub yaw_angle: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for Workspace {
    fn default() -> Self {
        Self::from_table(700.0, 40.0, 650.0, 950.0)
    }
}

impl Workspace {
    pub fn from_table(h_mm: f64, alpha_deg: f64, r_min_mm: f64, r_max_mm: f64) -> Self {
        Self {
            height: h_mm * 1e-3,
            yaw_angle: alpha_deg.to_radians(),
            r_min: r_min_mm * 1e-3,
            r_max: r_max_mm * 1e-3,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.r_min > 0.0
            && self.r_min < self.r_max
            && self.height > 0.0
            && self.yaw_angle > 0.0
            && self.yaw_angle < std::f64::consts::PI
    }

    /// Height, radius and bearing constraints on a point in Σ_M.
    pub fn contains(&self, p: &Vec3) -> bool {
        let along_axis = p.z;
        if !(-self.height <= along_axis && along_axis <= 0.0) {
            return false;
        }
        let r = p.norm();
        if !(self.r_min <= r && r <= self.r_max) {
            return false;
        }
        if p.x == 0.0 && p.y == 0.0 {
            return false;
        }
        p.y.atan2(p.x).abs() <= 0.5 * self.yaw_angle
    }
}

pub fn in_workspace(p: &Vec3, ws: &Workspace) -> bool {
    ws.contains(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn cfg() -> ManipulatorConfig {
        ManipulatorConfig::default()
    }

    #[test]
    fn defaults_follow_the_configuration_table() {
        let c = cfg();
        assert_relative_eq!(c.base_offset, 0.3);
        assert_eq!(c.link_lengths, [0.1, 0.4, 0.2, 0.53]);
        assert_relative_eq!(c.torch_angle.to_degrees(), 135.0, epsilon = 1e-12);
        assert_relative_eq!(c.camera_pitch.to_degrees(), -30.0, epsilon = 1e-12);
        assert_relative_eq!(c.camera_yaw.to_degrees(), -60.0, epsilon = 1e-12);
        assert_relative_eq!(c.damping.lambda, 0.0095, epsilon = 1e-15);
        let ws = Workspace::default();
        assert_relative_eq!(ws.height, 0.7);
        assert_relative_eq!(ws.r_min, 0.65);
        assert_relative_eq!(ws.r_max, 0.95);
        assert!(ws.is_valid());
    }

    #[test]
    fn straight_chain_golden() {
        // Hand geometry: L1+L2+L3 along x, then L4 bent 45 deg down.
        // x = 0.7 + 0.53 cos(pi/4), z = -0.53 sin(pi/4)
        let tip = cfg().forward_kinematics(&JointState::zero()).unwrap();
        assert_relative_eq!(tip.x, 1.074_766_594_028_87, epsilon = 1e-12);
        assert_relative_eq!(tip.y, 0.0, epsilon = 1e-15);
        assert_relative_eq!(tip.z, -0.374_766_594_028_87, epsilon = 1e-12);
    }

    #[test]
    fn roll_preserves_tip_norm() {
        let c = cfg();
        let q0 = JointState::new(0.0, 0.3, 0.4);
        let q1 = JointState::new(0.9, 0.3, 0.4);
        assert_relative_eq!(c.tip(&q0).norm(), c.tip(&q1).norm(), epsilon = 1e-14);
        // rotating about x keeps the x coordinate
        assert_relative_eq!(c.tip(&q0).x, c.tip(&q1).x, epsilon = 1e-14);
    }

    #[test]
    fn elbow_chord_bound() {
        let c = cfg();
        let a = c.tip(&JointState::new(0.0, 0.2, 0.0));
        let b = c.tip(&JointState::new(0.0, 0.2, FRAC_PI_2));
        let [_, _, l3, l4] = c.link_lengths;
        assert!((a - b).norm() <= 2.0 * (l3 + l4));
    }

    #[test]
    fn joint_limit_error() {
        let err = cfg().forward_kinematics(&JointState::new(0.0, 2.0, 0.0)).unwrap_err();
        assert!(matches!(err, KinematicsError::JointLimit { joint: 2, .. }));
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        let c = cfg();
        let q = JointState::new(0.2, -0.4, 0.9);
        let j = c.jacobian(&q);
        let h = 1e-7;
        for k in 0..3 {
            let mut qp = q;
            qp.angles[k] += h;
            let mut qm = q;
            qm.angles[k] -= h;
            let fd = (c.tip(&qp) - c.tip(&qm)) / (2.0 * h);
            assert_relative_eq!(j.column(k).into_owned(), fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn roll_column_is_perpendicular_to_roll_axis() {
        let c = cfg();
        let j = c.jacobian(&JointState::zero());
        assert_relative_eq!(j.column(0).dot(&Vec3::x()), 0.0, epsilon = 1e-15);
        let p = c.tip(&JointState::zero());
        assert_relative_eq!(j.column(0).dot(&p), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inverse_velocity_round_trip_and_zero() {
        let c = cfg();
        let q = JointState::new(0.1, -0.6, 1.0);
        let zero = c.inverse_velocity(&q, &Vec3::zeros());
        assert_eq!(zero.qdot, Vec3::zeros());
        let v = Vec3::new(0.05, -0.02, 0.03);
        let sol = c.inverse_velocity(&q, &v);
        assert!(!sol.damped && !sol.rate_limited);
        assert_relative_eq!(c.jacobian(&q) * sol.qdot, v, epsilon = 1e-12);
    }

    #[test]
    fn inverse_velocity_respects_rate_limits() {
        let c = cfg();
        let q = JointState::new(0.1, -0.6, 1.0);
        let sol = c.inverse_velocity(&q, &Vec3::new(5.0, 3.0, -4.0));
        assert!(sol.rate_limited);
        assert!(sol.qdot.abs().max() <= 2.0 + 1e-12);
        // direction preserved
        let raw = c.jacobian(&q).try_inverse().unwrap() * Vec3::new(5.0, 3.0, -4.0);
        assert_relative_eq!(sol.qdot.normalize(), raw.normalize(), epsilon = 1e-9);
    }

    #[test]
    fn static_vehicle_body_velocity() {
        let c = cfg();
        let r = crate::spatial::rot_zyx(0.4, 0.1, -0.05);
        let q = JointState::new(0.0, -0.5, 1.1);
        let v = Vec3::new(0.1, 0.2, -0.1);
        let got = c.desired_endpoint_body_velocity(&v, &Vec3::zeros(), &r, &Vec3::zeros(), &q);
        assert_relative_eq!(got, c.r_bm.transpose() * (r.transpose() * v), epsilon = 1e-15);
        let vb = Vec3::new(0.3, -0.1, 0.05);
        let none = c.desired_endpoint_body_velocity(&vb, &vb, &r, &Vec3::zeros(), &q);
        assert_relative_eq!(none, Vec3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn endpoint_world_frame_composition() {
        let mut c = cfg();
        let q = JointState::new(0.2, -0.3, 0.8);
        c.p_bm = Vec3::zeros();
        let p = c.endpoint_world(&Vec3::zeros(), &RotationMatrix::identity(), &q);
        assert_relative_eq!(p, c.r_bm * c.tip(&q), epsilon = 1e-15);
        let c = cfg();
        let r = crate::spatial::rot_zyx(0.1, 0.2, 0.3);
        let t = Vec3::new(1.0, -2.0, 3.0);
        let a = c.endpoint_world(&Vec3::zeros(), &r, &q);
        let b = c.endpoint_world(&t, &r, &q);
        assert_relative_eq!(b - a, t, epsilon = 1e-14);
    }

    #[test]
    fn endpoint_velocity_static_and_translation() {
        let c = cfg();
        let r = crate::spatial::rot_zyx(0.1, 0.2, 0.3);
        let q = JointState::new(0.2, -0.3, 0.8);
        let z = Vec3::zeros();
        assert_eq!(c.endpoint_velocity_world(&z, &r, &z, &q, &z), z);
        let vb = Vec3::new(0.4, 0.1, -0.2);
        assert_relative_eq!(c.endpoint_velocity_world(&vb, &r, &z, &q, &z), vb);
    }

    #[test]
    fn workspace_hand_evaluations() {
        let ws = Workspace::default();
        // |(800, 0, -350)| = 873.2 mm, bearing 0, depth 350 mm
        assert!(ws.contains(&Vec3::new(0.8, 0.0, -0.35)));
        // |(600, 0, -350)| = 694.6 mm: the full-norm radius test admits it
        assert!(ws.contains(&Vec3::new(0.6, 0.0, -0.35)));
        // |(600, 0, -100)| = 608.3 mm < r_min
        assert!(!ws.contains(&Vec3::new(0.6, 0.0, -0.1)));
        // above the x-o-y plane of Σ_M
        assert!(!ws.contains(&Vec3::new(0.8, 0.0, 0.05)));
        // deeper than h
        assert!(!ws.contains(&Vec3::new(0.5, 0.0, -0.71)));
        // bearing 25 deg > 20 deg
        let b = 25f64.to_radians();
        assert!(!ws.contains(&Vec3::new(0.8 * b.cos(), 0.8 * b.sin(), -0.2)));
        // on the axis: bearing undefined
        assert!(!ws.contains(&Vec3::new(0.0, 0.0, -0.7)));
    }

    #[test]
    fn position_ik_converges() {
        let c = cfg();
        let target = Vec3::new(0.75, 0.0, -0.3);
        let q = c.solve_position(&target, &JointState::new(0.0, -0.5, 1.0)).unwrap();
        assert_relative_eq!(c.tip(&q), target, epsilon = 1e-10);
        c.check_limits(&q).unwrap();
        assert!(c.solve_position(&Vec3::new(3.0, 0.0, 0.0), &q).is_err());
    }
}
