use super::{
    ArmMotion, CouplingDisturbance, CouplingTerms, DynamicsError, InertiaModel, QuadrotorState,
    TorqueForm,
};
use crate::kinematics::ManipulatorConfig;
use crate::spatial::{e3, reorthonormalize, skew, Mat3, RotationMatrix, Vec3};

/// Longest step accepted by [`integrate_step`], s.
pub const MAX_STEP: f64 = 0.01;

/// Everything the rigid-body integrator needs besides the state.
#[derive(Clone, Debug)]
pub struct Plant {
    pub model: InertiaModel,
    pub manipulator: ManipulatorConfig,
    pub torque_form: TorqueForm,
    pub max_thrust: f64,
}

impl Plant {
    pub fn new(model: InertiaModel, manipulator: ManipulatorConfig) -> Self {
        let max_thrust = 40.0 * model.gravity;
        Self { model, manipulator, torque_form: TorqueForm::default(), max_thrust }
    }
}

/// Actuator and environment inputs held constant over one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInputs {
    /// Collective thrust, N.
    pub thrust: f64,
    /// Rotor torque, Σ_B, N m.
    pub torque: Vec3,
    /// External force, Σ_I, N.
    pub wind: Vec3,
    /// Arm trajectory over the step.
    pub arm: ArmMotion,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDerivative {
    pub position: Vec3,
    pub velocity: Vec3,
    pub attitude: Mat3,
    pub body_rate: Vec3,
}

fn check_thrust(thrust: f64, max: f64) -> Result<(), DynamicsError> {
    if !(0.0..=max).contains(&thrust) {
        return Err(DynamicsError::ThrustOutOfRange { thrust, max });
    }
    Ok(())
}

/// Rigid-body equations of motion with the disturbance supplied externally.
#[allow(clippy::too_many_arguments)]
pub fn quadrotor_derivative(
    state: &QuadrotorState,
    thrust: f64,
    torque: &Vec3,
    dist: &CouplingDisturbance,
    wind: &Vec3,
    model: &InertiaModel,
    max_thrust: f64,
) -> Result<StateDerivative, DynamicsError> {
    check_thrust(thrust, max_thrust)?;
    let m = model.total_mass;
    let r = state.attitude.matrix();
    let w = state.body_rate;
    let ib = model.body_inertia;
    let v_dot = -(r * e3()) * (thrust / m) + e3() * model.gravity + (dist.force + wind) / m;
    let rhs = torque - w.cross(&(ib * w)) + dist.torque;
    let w_dot = ib.try_inverse().ok_or(DynamicsError::NonFinite)? * rhs;
    Ok(StateDerivative {
        position: state.velocity,
        velocity: v_dot,
        attitude: r * skew(&w),
        body_rate: w_dot,
    })
}

/// Accelerations and disturbance with the arm coupling resolved exactly.
///
/// The disturbance depends on the vehicle's own linear and angular
/// acceleration, so the two are solved together: translational acceleration
/// is affine in `omega_dot`, which leaves a 3x3 linear system for
/// `omega_dot`.
pub fn coupled_response(
    state: &QuadrotorState,
    inputs: &StepInputs,
    plant: &Plant,
) -> Result<(StateDerivative, CouplingDisturbance), DynamicsError> {
    check_thrust(inputs.thrust, plant.max_thrust)?;
    let model = &plant.model;
    let terms = CouplingTerms::compute(&inputs.arm, model, &plant.manipulator);
    let m = model.total_mass;
    let g = model.gravity;
    let r = state.attitude.matrix();
    let w = state.body_rate;
    let rc = terms.r_com;
    let sk = skew(&rc);

    let b1 = -(r * e3()) * (inputs.thrust / m) + e3() * g + inputs.wind / m
        - r * (w.cross(&w.cross(&rc)) + 2.0 * w.cross(&terms.r_com_dot) + terms.r_com_ddot);

    let (a, b2) = if terms.arm_mass > f64::EPSILON {
        let k = m * m / terms.arm_mass;
        let third = match plant.torque_form {
            TorqueForm::InertiaRate => terms.arm_inertia_dot * w,
            TorqueForm::Literal => terms.arm_inertia * w,
        };
        let b2 = inputs.torque
            - w.cross(&(model.body_inertia * w))
            - w.cross(&(terms.arm_inertia * w))
            - third
            + sk * (r.transpose() * (e3() * g - b1)) * m
            - rc.cross(&terms.r_com_ddot) * k
            - w.cross(&rc.cross(&terms.r_com_dot)) * k;
        (model.body_inertia + terms.arm_inertia + sk * sk * m, b2)
    } else {
        (model.body_inertia, inputs.torque - w.cross(&(model.body_inertia * w)))
    };
    let w_dot = a.lu().solve(&b2).ok_or(DynamicsError::NonFinite)?;
    let v_dot = b1 + r * (sk * w_dot);

    let dist = CouplingDisturbance {
        force: terms.force(state, &w_dot),
        torque: terms.torque(state, &w_dot, &v_dot, g, plant.torque_form),
    };
    let deriv = StateDerivative {
        position: state.velocity,
        velocity: v_dot,
        attitude: r * skew(&w),
        body_rate: w_dot,
    };
    Ok((deriv, dist))
}

fn offset(state: &QuadrotorState, d: &StateDerivative, h: f64) -> QuadrotorState {
    QuadrotorState {
        position: state.position + d.position * h,
        velocity: state.velocity + d.velocity * h,
        attitude: RotationMatrix::from_matrix_unchecked(state.attitude.matrix() + d.attitude * h),
        body_rate: state.body_rate + d.body_rate * h,
    }
}

/// One classical RK4 step of the coupled plant, followed by projection of
/// the attitude back onto SO(3).
///
/// Returns the new state and the disturbance evaluated at the start of the
/// step.
pub fn integrate_step(
    plant: &Plant,
    state: &QuadrotorState,
    inputs: &StepInputs,
    dt: f64,
) -> Result<(QuadrotorState, CouplingDisturbance), DynamicsError> {
    if !(dt > 0.0 && dt <= MAX_STEP) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    let at = |s: f64| StepInputs { arm: inputs.arm.advanced(s), ..*inputs };
    let (k1, dist) = coupled_response(state, inputs, plant)?;
    let (k2, _) = coupled_response(&offset(state, &k1, 0.5 * dt), &at(0.5 * dt), plant)?;
    let (k3, _) = coupled_response(&offset(state, &k2, 0.5 * dt), &at(0.5 * dt), plant)?;
    let (k4, _) = coupled_response(&offset(state, &k3, dt), &at(dt), plant)?;
    let sixth = dt / 6.0;
    let combine = |f: fn(&StateDerivative) -> Vec3| {
        (f(&k1) + f(&k2) * 2.0 + f(&k3) * 2.0 + f(&k4)) * sixth
    };
    let attitude = state.attitude.matrix()
        + (k1.attitude + k2.attitude * 2.0 + k3.attitude * 2.0 + k4.attitude) * sixth;
    let next = QuadrotorState {
        position: state.position + combine(|d| d.position),
        velocity: state.velocity + combine(|d| d.velocity),
        attitude: reorthonormalize(&attitude)?,
        body_rate: state.body_rate + combine(|d| d.body_rate),
    };
    if !next.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    Ok((next, dist))
}
