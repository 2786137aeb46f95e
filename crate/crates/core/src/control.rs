//! Cascade flight controller: position PID producing a desired acceleration
//! and thrust, a desired-attitude construction from that acceleration and a
//! yaw reference, and an attitude PD producing rotor torque. Both loops take
//! the arm coupling disturbance as a feed-forward input.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::CouplingDisturbance;
use crate::spatial::{e3, vee, Mat3, RotationMatrix, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("thrust axis is parallel to the yaw reference, attitude undefined")]
    DegenerateAttitude,
    #[error("invalid gains: {0}")]
    InvalidGains(String),
}

/// Diagonal PID gains; each vector holds the diagonal of the gain matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionGains {
    pub kp: Vec3,
    pub ki: Vec3,
    pub kd: Vec3,
    /// Componentwise bound on the integrated position error, m s.
    pub integral_limit: Vec3,
}

impl Default for PositionGains {
    fn default() -> Self {
        Self {
            kp: Vec3::new(3.0, 3.0, 4.0),
            ki: Vec3::new(0.4, 0.4, 0.6),
            kd: Vec3::new(3.0, 3.0, 3.6),
            integral_limit: Vec3::new(0.5, 0.5, 0.5),
        }
    }
}

impl PositionGains {
    pub fn validate(&self) -> Result<(), ControlError> {
        let positive = |v: &Vec3| v.iter().all(|x| *x > 0.0 && x.is_finite());
        if !(positive(&self.kp) && positive(&self.ki) && positive(&self.kd)) {
            return Err(ControlError::InvalidGains("position gains must be positive".into()));
        }
        if !self.integral_limit.iter().all(|x| *x >= 0.0 && x.is_finite()) {
            return Err(ControlError::InvalidGains("integral limit must be finite".into()));
        }
        Ok(())
    }
}

/// Diagonal PD gains for the attitude loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeGains {
    pub kp: Vec3,
    pub kd: Vec3,
}

impl Default for AttitudeGains {
    fn default() -> Self {
        Self { kp: Vec3::new(80.0, 80.0, 40.0), kd: Vec3::new(16.0, 16.0, 14.0) }
    }
}

impl AttitudeGains {
    pub fn validate(&self) -> Result<(), ControlError> {
        let positive = |v: &Vec3| v.iter().all(|x| *x > 0.0 && x.is_finite());
        if !(positive(&self.kp) && positive(&self.kd)) {
            return Err(ControlError::InvalidGains("attitude gains must be positive".into()));
        }
        Ok(())
    }
}

/// Actuator and command saturations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlLimits {
    pub max_thrust: f64,
    /// Per-axis rotor torque bound, N m.
    pub max_torque: Vec3,
    /// Floor on the desired-acceleration norm, m/s^2.
    pub min_accel: f64,
    /// Largest tilt the position loop may request, rad.
    pub max_tilt: f64,
}

impl Default for ControlLimits {
    fn default() -> Self {
        Self {
            max_thrust: 40.0 * crate::dynamics::STANDARD_GRAVITY,
            max_torque: Vec3::new(50.0, 50.0, 20.0),
            min_accel: 1.0,
            max_tilt: 30f64.to_radians(),
        }
    }
}

/// How the body x axis is built from the thrust axis and the yaw reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttitudeConstruction {
    /// `x` is the yaw heading lifted along `e3` onto the plane normal to the
    /// thrust axis, so its horizontal projection points exactly at `psi_d`.
    #[default]
    ProjectedHeading,
    /// `y = z x x~ / |z x x~|`, `x = y x z`. The horizontal projection of `x`
    /// drifts from `psi_d` whenever the thrust axis tilts sideways.
    CrossProduct,
}

/// Output of one position-loop tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlCommand {
    pub thrust: f64,
    pub torque: Vec3,
    /// Desired acceleration, Σ_I.
    pub accel: Vec3,
    pub saturated: bool,
}

/// Position PID with integral state and anti-windup.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionController {
    pub gains: PositionGains,
    pub limits: ControlLimits,
    integral: Vec3,
}

/// Result of [`PositionController::update`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionOutput {
    /// Σ_I.
    pub accel: Vec3,
    pub thrust: f64,
    pub saturated: bool,
}

impl PositionController {
    pub fn new(gains: PositionGains, limits: ControlLimits) -> Self {
        Self { gains, limits, integral: Vec3::zeros() }
    }

    pub fn integral(&self) -> Vec3 {
        self.integral
    }

    pub fn reset(&mut self) {
        self.integral = Vec3::zeros();
    }

    /// One tick. `e_p = p_d - p`; `force_dis` is the Σ_I coupling force used
    /// as feed-forward (pass zero to disable compensation). `accel_ref` is the
    /// reference acceleration in Σ_I; zero gives the plain PID law.
    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        p: &Vec3,
        v: &Vec3,
        p_d: &Vec3,
        v_d: &Vec3,
        accel_ref: &Vec3,
        force_dis: &Vec3,
        attitude: &RotationMatrix,
        mass: f64,
        gravity: f64,
        dt: f64,
    ) -> PositionOutput {
        let g = &self.gains;
        let e_p = p_d - p;
        let e_v = v_d - v;
        let lim = g.integral_limit;
        let raw = self.integral + e_p * dt;
        self.integral = Vec3::from_fn(|i, _| raw[i].clamp(-lim[i], lim[i]));
        let mut saturated = raw != self.integral;

        let mut a_d = -g.kp.component_mul(&e_p) - g.ki.component_mul(&self.integral)
            - g.kd.component_mul(&e_v)
            + e3() * gravity
            + force_dis / mass
            - accel_ref;

        let (a, tilted) = limit_acceleration(&a_d, &self.limits);
        saturated |= tilted;
        a_d = a;

        let body_z = attitude * e3();
        let raw_thrust = mass * a_d.dot(&body_z);
        let thrust = raw_thrust.clamp(0.0, self.limits.max_thrust);
        saturated |= thrust != raw_thrust;
        PositionOutput { accel: a_d, thrust, saturated }
    }
}

/// Applies the tilt bound and the norm floor to a desired acceleration.
/// Returns the limited vector and whether anything changed.
pub fn limit_acceleration(a_d: &Vec3, limits: &ControlLimits) -> (Vec3, bool) {
    let mut a = *a_d;
    let mut changed = false;
    let vertical = a.z.max(limits.min_accel);
    if vertical != a.z {
        a.z = vertical;
        changed = true;
    }
    let horizontal = a.xy().norm();
    let max_h = vertical * limits.max_tilt.tan();
    if horizontal > max_h {
        let s = max_h / horizontal;
        a.x *= s;
        a.y *= s;
        changed = true;
    }
    (a, changed)
}

/// Desired vehicle attitude with the thrust axis along `a_d` and heading
/// `psi_d`. Columns are the desired body axes in Σ_I.
pub fn desired_attitude(
    a_d: &Vec3,
    psi_d: f64,
    construction: AttitudeConstruction,
) -> Result<RotationMatrix, ControlError> {
    let norm = a_d.norm();
    let z = if norm > 0.0 { a_d / norm } else { e3() };
    let heading = Vec3::new(psi_d.cos(), psi_d.sin(), 0.0);
    let (x, y) = match construction {
        AttitudeConstruction::ProjectedHeading => {
            if z.z.abs() < 1e-9 {
                return Err(ControlError::DegenerateAttitude);
            }
            let x = (heading - e3() * (heading.dot(&z) / z.z)).normalize();
            (x, z.cross(&x))
        }
        AttitudeConstruction::CrossProduct => {
            let c = z.cross(&heading);
            let n = c.norm();
            if n < 1e-9 {
                return Err(ControlError::DegenerateAttitude);
            }
            let y = c / n;
            (y.cross(&z), y)
        }
    };
    Ok(RotationMatrix::from_matrix_unchecked(Mat3::from_columns(&[x, y, z])))
}

/// `e_R = 1/2 vee(R_d^T R - R^T R_d)`.
pub fn attitude_error(r: &RotationMatrix, r_d: &RotationMatrix) -> Vec3 {
    let a = r_d.transpose() * r;
    let m = a.matrix() - a.matrix().transpose();
    vee(&m) * 0.5
}

/// Body-rate error for a rate reference `omega_d` given in the desired frame.
pub fn attitude_rate_error(
    r: &RotationMatrix,
    r_d: &RotationMatrix,
    omega: &Vec3,
    omega_d: &Vec3,
) -> Vec3 {
    omega - r.transpose() * (r_d * omega_d)
}

/// PD attitude law with disturbance feed-forward.
///
/// `torque_dis` is the torque the arm exerts on the body (the same quantity
/// that enters the rotational dynamics additively), so it is subtracted to
/// cancel it. Output is clamped per axis.
pub fn attitude_control(
    e_r: &Vec3,
    e_r_dot: &Vec3,
    torque_dis: &Vec3,
    gains: &AttitudeGains,
    max_torque: &Vec3,
) -> Vec3 {
    let raw = -gains.kp.component_mul(e_r) - gains.kd.component_mul(e_r_dot) - torque_dis;
    Vec3::from_fn(|i, _| raw[i].clamp(-max_torque[i], max_torque[i]))
}

/// Full cascade state: position PID plus the attitude gains and options.
#[derive(Clone, Debug, PartialEq)]
pub struct FlightController {
    pub position: PositionController,
    pub attitude: AttitudeGains,
    pub construction: AttitudeConstruction,
    last: PositionOutput,
    desired: RotationMatrix,
}

impl FlightController {
    pub fn new(
        position: PositionGains,
        attitude: AttitudeGains,
        limits: ControlLimits,
        construction: AttitudeConstruction,
    ) -> Self {
        Self {
            position: PositionController::new(position, limits),
            attitude,
            construction,
            last: PositionOutput { accel: e3() * crate::dynamics::STANDARD_GRAVITY, thrust: 0.0, saturated: false },
            desired: RotationMatrix::identity(),
        }
    }

    pub fn limits(&self) -> &ControlLimits {
        &self.position.limits
    }

    /// Outer loop tick: updates the held thrust and desired attitude.
    #[allow(clippy::too_many_arguments)]
    pub fn update_position(
        &mut self,
        p: &Vec3,
        v: &Vec3,
        attitude: &RotationMatrix,
        p_d: &Vec3,
        v_d: &Vec3,
        accel_ref: &Vec3,
        psi_d: f64,
        dist: &CouplingDisturbance,
        mass: f64,
        gravity: f64,
        dt: f64,
    ) -> Result<PositionOutput, ControlError> {
        let out = self.position.update(p, v, p_d, v_d, accel_ref, &dist.force, attitude, mass, gravity, dt);
        self.desired =
            desired_attitude(&out.accel, psi_d, self.construction)?;
        self.last = out;
        Ok(out)
    }

    /// Inner loop tick against the held desired attitude.
    pub fn update_attitude(
        &self,
        attitude: &RotationMatrix,
        omega: &Vec3,
        dist: &CouplingDisturbance,
    ) -> (ControlCommand, Vec3) {
        let e_r = attitude_error(attitude, &self.desired);
        let e_r_dot = attitude_rate_error(attitude, &self.desired, omega, &Vec3::zeros());
        let torque =
            attitude_control(&e_r, &e_r_dot, &dist.torque, &self.attitude, &self.position.limits.max_torque);
        let cmd = ControlCommand {
            thrust: self.last.thrust,
            torque,
            accel: self.last.accel,
            saturated: self.last.saturated,
        };
        (cmd, e_r)
    }

    pub fn desired_attitude(&self) -> &RotationMatrix {
        &self.desired
    }

    /// Holds thrust at zero and levels out; used while resting on the ground.
    pub fn idle(&mut self, psi_d: f64) {
        self.position.reset();
        self.last.thrust = 0.0;
        self.desired = crate::spatial::rot_yaw(psi_d);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{orthonormality_error, rot_x, rot_yaw, rot_zyx, skew, yaw_of};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    const G: f64 = 9.81;

    fn controller() -> PositionController {
        PositionController::new(PositionGains::default(), ControlLimits::default())
    }

    #[test]
    fn hover_feedforward() {
        let mut c = controller();
        let p = Vec3::new(1.0, 2.0, -5.0);
        let z = Vec3::zeros();
        let out = c.update(&p, &z, &p, &z, &z, &z, &RotationMatrix::identity(), 35.0, G, 0.01);
        assert_relative_eq!(out.accel, e3() * G);
        assert_relative_eq!(out.thrust, 35.0 * G, epsilon = 1e-12);
    }

    #[test]
    fn force_feedforward_hand_value() {
        // a_d = g e3 + (0,0,-5)/m  ->  F_d = m g - 5
        let mut c = controller();
        let z = Vec3::zeros();
        let f = Vec3::new(0.0, 0.0, -5.0);
        let out = c.update(&z, &z, &z, &z, &z, &f, &RotationMatrix::identity(), 35.0, G, 0.01);
        assert_relative_eq!(out.thrust, 35.0 * G - 5.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_acceleration_enters_opposite_thrust() {
        // climbing at 1 m/s^2 (NED -z) needs g + 1 along the thrust axis
        let mut c = controller();
        let z = Vec3::zeros();
        let up = Vec3::new(0.0, 0.0, -1.0);
        let out = c.update(&z, &z, &z, &z, &up, &z, &RotationMatrix::identity(), 35.0, G, 0.01);
        assert_relative_eq!(out.thrust, 35.0 * (G + 1.0), epsilon = 1e-12);
    }

    #[test]
    fn thrust_equals_norm_when_aligned() {
        let mut c = controller();
        let z = Vec3::zeros();
        let p_d = Vec3::new(0.05, -0.03, 0.02);
        let out = c.update(&z, &z, &p_d, &z, &z, &z, &RotationMatrix::identity(), 35.0, G, 0.01);
        let r = desired_attitude(&out.accel, 0.3, AttitudeConstruction::default()).unwrap();
        let mut c2 = controller();
        let out2 = c2.update(&z, &z, &p_d, &z, &z, &z, &r, 35.0, G, 0.01);
        assert_relative_eq!(out2.thrust, 35.0 * out2.accel.norm(), epsilon = 1e-12);
    }

    #[test]
    fn integral_is_clamped() {
        let mut c = controller();
        let z = Vec3::zeros();
        let far = Vec3::new(10.0, -10.0, 10.0);
        for _ in 0..1000 {
            c.update(&z, &z, &far, &z, &z, &z, &RotationMatrix::identity(), 35.0, G, 0.01);
            let i = c.integral();
            for k in 0..3 {
                assert!(i[k].abs() <= c.gains.integral_limit[k] + 1e-15);
            }
        }
    }

    #[test]
    fn acceleration_limits() {
        let lim = ControlLimits::default();
        let (a, changed) = limit_acceleration(&Vec3::new(0.0, 0.0, -3.0), &lim);
        assert!(changed);
        assert_relative_eq!(a.z, 1.0);
        let (a, changed) = limit_acceleration(&Vec3::new(20.0, 0.0, G), &lim);
        assert!(changed);
        assert_relative_eq!(a.x.atan2(a.z), lim.max_tilt, epsilon = 1e-12);
    }

    #[test]
    fn desired_attitude_hover_cases() {
        for c in [AttitudeConstruction::ProjectedHeading, AttitudeConstruction::CrossProduct] {
            let r = desired_attitude(&(e3() * G), 0.0, c).unwrap();
            assert_relative_eq!(r.into_inner(), Mat3::identity(), epsilon = 1e-15);
            let r = desired_attitude(&(e3() * G), FRAC_PI_2, c).unwrap();
            assert_relative_eq!(yaw_of(&r), FRAC_PI_2, epsilon = 1e-15);
        }
    }

    #[test]
    fn projected_heading_keeps_yaw_under_tilt() {
        let a = Vec3::new(2.0, -3.0, 9.0);
        let psi = 0.7;
        let r = desired_attitude(&a, psi, AttitudeConstruction::ProjectedHeading).unwrap();
        assert!(orthonormality_error(r.matrix()) < 1e-14);
        assert_relative_eq!(r * e3(), a.normalize(), epsilon = 1e-15);
        assert_relative_eq!(yaw_of(&r), psi, epsilon = 1e-14);
        let lit = desired_attitude(&a, psi, AttitudeConstruction::CrossProduct).unwrap();
        assert_relative_eq!(lit * e3(), a.normalize(), epsilon = 1e-15);
        assert!((yaw_of(&lit) - psi).abs() > 1e-4);
    }

    #[test]
    fn degenerate_attitude_reported() {
        let a = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(
            desired_attitude(&a, 0.0, AttitudeConstruction::CrossProduct),
            Err(ControlError::DegenerateAttitude)
        );
        assert_eq!(
            desired_attitude(&a, 0.0, AttitudeConstruction::ProjectedHeading),
            Err(ControlError::DegenerateAttitude)
        );
    }

    #[test]
    fn attitude_error_small_rotation() {
        let rd = rot_zyx(0.4, -0.1, 0.2);
        assert_relative_eq!(attitude_error(&rd, &rd), Vec3::zeros(), epsilon = 1e-15);
        let n = Vec3::new(1.0, 2.0, -2.0).normalize();
        let delta = 0.05;
        let perturb = RotationMatrix::from_scaled_axis(n * delta);
        let r = rd * perturb;
        // exact for a rotation of delta about n: e_R = sin(delta) n
        assert_relative_eq!(attitude_error(&r, &rd), n * delta.sin(), epsilon = 1e-14);
        assert_relative_eq!(attitude_error(&rd, &r), -(n * delta.sin()), epsilon = 1e-14);
        let r2 = rot_x(0.3);
        assert_eq!(attitude_error(&r2, &rd), -attitude_error(&rd, &r2));
        let _ = skew(&n);
    }

    #[test]
    fn attitude_law_feedthrough_and_clamp() {
        let gains = AttitudeGains::default();
        let lim = Vec3::new(50.0, 50.0, 20.0);
        let z = Vec3::zeros();
        assert_eq!(attitude_control(&z, &z, &z, &gains, &lim), z);
        let t0 = Vec3::new(3.0, -4.0, 1.0);
        assert_eq!(attitude_control(&z, &z, &t0, &gains, &lim), -t0);
        let big = attitude_control(&Vec3::new(10.0, 0.0, 0.0), &z, &z, &gains, &lim);
        assert_relative_eq!(big.x, -50.0);
    }

    #[test]
    fn yaw_only_error_direction() {
        let rd = rot_yaw(0.0);
        let r = rot_yaw(0.1);
        let e = attitude_error(&r, &rd);
        assert_relative_eq!(e, Vec3::new(0.0, 0.0, 0.1f64.sin()), epsilon = 1e-15);
    }
}
