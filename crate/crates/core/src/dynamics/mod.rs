//! Quadrotor rigid-body dynamics with the arm treated as a moving-mass
//! disturbance.
//!
//! The vehicle obeys the usual translational/rotational equations about the
//! Σ_B origin. The arm enters only through the variable system centre of mass
//! `r_com(q)` and the arm inertia `I_m(q)` about the Σ_B origin, which produce
//! the disturbance pair `(F_dis, tau_dis)`.

mod coupling;
mod integrator;

pub use coupling::{
    com_derivatives, coupling_force, coupling_torque, inertia_rate, manipulator_inertia_body,
    system_com, CouplingTerms, TorqueForm,
};
pub use integrator::{
    coupled_response, integrate_step, quadrotor_derivative, Plant, StateDerivative, StepInputs,
    MAX_STEP,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{JointState, ManipulatorConfig};
use crate::spatial::{Mat3, RotationMatrix, SpatialError, Vec3};

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("thrust {thrust} N outside [0, {max}] N")]
    ThrustOutOfRange { thrust: f64, max: f64 },
    #[error("state became non-finite")]
    NonFinite,
    #[error("step {0} s outside (0, 0.01]")]
    InvalidStep(f64),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
}

/// Vehicle state. Position and velocity in Σ_I, body rate in Σ_B.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadrotorState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Σ_B to Σ_I.
    pub attitude: RotationMatrix,
    pub body_rate: Vec3,
}

impl QuadrotorState {
    pub fn at_rest(position: Vec3, yaw: f64) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            attitude: crate::spatial::rot_yaw(yaw),
            body_rate: Vec3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.velocity.iter().all(|x| x.is_finite())
            && self.attitude.matrix().iter().all(|x| x.is_finite())
            && self.body_rate.iter().all(|x| x.is_finite())
    }
}

/// Force (Σ_I) and torque (Σ_B) the moving arm exerts on the vehicle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CouplingDisturbance {
    pub force: Vec3,
    pub torque: Vec3,
}

impl CouplingDisturbance {
    pub fn zero() -> Self {
        Self::default()
    }
}

/// Mass properties of one arm link, in that link's frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkInertia {
    pub mass: f64,
    pub com: Vec3,
    /// About the link CoM.
    pub inertia: Mat3,
}

impl LinkInertia {
    /// Solid rod along local x.
    pub fn uniform_rod(mass: f64, length: f64, radius: f64) -> Self {
        let axial = 0.5 * mass * radius * radius;
        let transverse = mass * (3.0 * radius * radius + length * length) / 12.0;
        Self {
            mass,
            com: Vec3::new(0.5 * length, 0.0, 0.0),
            inertia: Mat3::from_diagonal(&Vec3::new(axial, transverse, transverse)),
        }
    }

    pub fn massless() -> Self {
        Self { mass: 0.0, com: Vec3::zeros(), inertia: Mat3::zeros() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InertiaModel {
    /// m_s, whole system including the arm, kg.
    pub total_mass: f64,
    /// I_b about the Σ_B origin, kg m^2.
    pub body_inertia: Mat3,
    pub links: [LinkInertia; 4],
    pub gravity: f64,
}

impl InertiaModel {
    /// 35 kg vehicle, 1.5 kg torch, 2 kg of arm split by link length.
    pub fn reference(arm: &ManipulatorConfig) -> Self {
        let [l1, l2, l3, l4] = arm.link_lengths;
        let arm_links = l1 + l2 + l3;
        let per_metre = 2.0 / arm_links;
        let radius = 0.02;
        Self {
            total_mass: 35.0,
            body_inertia: Mat3::from_diagonal(&Vec3::new(1.2, 1.2, 2.0)),
            links: [
                LinkInertia::uniform_rod(per_metre * l1, l1, radius),
                LinkInertia::uniform_rod(per_metre * l2, l2, radius),
                LinkInertia::uniform_rod(per_metre * l3, l3, radius),
                LinkInertia::uniform_rod(1.5, l4, radius),
            ],
            gravity: STANDARD_GRAVITY,
        }
    }

    /// Same vehicle with a massless arm.
    pub fn without_arm(total_mass: f64, body_inertia: Mat3) -> Self {
        Self {
            total_mass,
            body_inertia,
            links: [LinkInertia::massless(); 4],
            gravity: STANDARD_GRAVITY,
        }
    }

    /// m_m.
    pub fn arm_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }

    pub fn validate(&self) -> Result<(), String> {
        let m_m = self.arm_mass();
        if !(self.total_mass > m_m && m_m > 0.0) {
            return Err(format!(
                "need total mass > arm mass > 0, got {} and {m_m}",
                self.total_mass
            ));
        }
        if !is_spd(&self.body_inertia) {
            return Err("body inertia must be symmetric positive definite".into());
        }
        for (i, l) in self.links.iter().enumerate() {
            if !(l.mass > 0.0) || !is_spd(&l.inertia) {
                return Err(format!("link {} needs positive mass and SPD inertia", i + 1));
            }
        }
        if !(self.gravity > 0.0) {
            return Err("gravity must be positive".into());
        }
        Ok(())
    }
}

fn is_spd(m: &Mat3) -> bool {
    (m - m.transpose()).abs().max() <= 1e-12 * m.abs().max().max(1.0)
        && m.cholesky().is_some()
}

/// Arm joint trajectory over one integration step: constant acceleration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmMotion {
    pub q: JointState,
    pub qd: Vec3,
    pub qdd: Vec3,
}

impl ArmMotion {
    pub fn stationary(q: JointState) -> Self {
        Self { q, qd: Vec3::zeros(), qdd: Vec3::zeros() }
    }

    /// Joint state `s` seconds into the step.
    pub fn advanced(&self, s: f64) -> Self {
        Self {
            q: JointState { angles: self.q.angles + self.qd * s + self.qdd * (0.5 * s * s) },
            qd: self.qd + self.qdd * s,
            qdd: self.qdd,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_model_totals() {
        let m = InertiaModel::reference(&ManipulatorConfig::default());
        assert_relative_eq!(m.arm_mass(), 3.5, epsilon = 1e-12);
        assert_relative_eq!(m.links[3].mass, 1.5);
        m.validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_masses() {
        let mut m = InertiaModel::reference(&ManipulatorConfig::default());
        m.total_mass = 3.0;
        assert!(m.validate().is_err());
        let m = InertiaModel::without_arm(35.0, Mat3::identity());
        assert!(m.validate().is_err());
    }

    #[test]
    fn arm_motion_advances_quadratically() {
        let a = ArmMotion {
            q: JointState::new(0.1, 0.2, 0.3),
            qd: Vec3::new(1.0, 0.0, -1.0),
            qdd: Vec3::new(2.0, 2.0, 2.0),
        };
        let b = a.advanced(0.5);
        assert_relative_eq!(b.q.angles, Vec3::new(0.1 + 0.5 + 0.25, 0.2 + 0.25, 0.3 - 0.5 + 0.25));
        assert_relative_eq!(b.qd, Vec3::new(2.0, 1.0, 0.0));
    }
}
