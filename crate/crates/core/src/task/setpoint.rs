use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::dynamics::QuadrotorState;
use crate::spatial::{e3, rot_yaw, wrap_angle, yaw_of, Vec3};
use crate::vision::TargetObservation;

/// Where the target torch should sit relative to the vehicle while lighting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingReference {
    /// Ideal target torch tip in Σ_B, m.
    pub p_t_star: Vec3,
    /// Ideal target heading in Σ_B, rad.
    pub psi_t_star: f64,
    /// Fire point height above the target torch tip, m.
    pub h_off: f64,
}

/// Vehicle goal and endpoint goal derived from one observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoverSetpoint {
    pub psi_d: f64,
    /// Σ_I.
    pub p_b_d: Vec3,
    /// Σ_I.
    pub p_end_d: Vec3,
}

/// Vehicle pose that puts the observed target at the ideal relative pose,
/// plus the fire point the torch tip should reach.
///
/// `quad` must be the vehicle state at the observation's capture time. The
/// fire point lies `h_off` against gravity from the target tip (`-e3` in
/// NED).
pub fn hovering_setpoint(
    obs: &TargetObservation,
    quad: &QuadrotorState,
    reference: &OperatingReference,
) -> Result<HoverSetpoint, TaskError> {
    if !obs.valid {
        return Err(TaskError::InvalidObservation);
    }
    let psi = yaw_of(&quad.attitude);
    let psi_d = wrap_angle(psi + obs.psi_t_body - reference.psi_t_star);
    let p_b_d = quad.position + rot_yaw(psi) * obs.p_t_body - rot_yaw(psi_d) * reference.p_t_star;
    let p_end_d = quad.position + quad.attitude * obs.p_t_body - e3() * reference.h_off;
    Ok(HoverSetpoint { psi_d, p_b_d, p_end_d })
}
