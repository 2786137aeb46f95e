use super::config::{Compensation, ControlSpec, Scenario};
use crate::control::{ControlCommand, ControlError, FlightController};
use crate::dynamics::{
    integrate_step, ArmMotion, CouplingDisturbance, DynamicsError, Plant, QuadrotorState, StepInputs,
};
use crate::kinematics::JointState;
use crate::spatial::{rot_yaw, yaw_of, Vec3};

/// Plant, cascade controller and the held actuator commands.
#[derive(Clone, Debug)]
pub struct Vehicle {
    pub plant: Plant,
    pub controller: FlightController,
    pub state: QuadrotorState,
    /// Arm trajectory for the current physics step.
    pub arm: ArmMotion,
    /// Coupling disturbance at the start of the last physics step.
    pub disturbance: CouplingDisturbance,
    pub compensation: Compensation,
    pub command: ControlCommand,
    pub attitude_error: Vec3,
    pub on_ground: bool,
}

impl Vehicle {
    pub fn new(scenario: &Scenario, control: &ControlSpec, state: QuadrotorState, q: JointState) -> Self {
        let mut plant = Plant::new(scenario.inertia.clone(), scenario.manipulator.clone());
        plant.torque_form = control.torque_form;
        plant.max_thrust = control.limits.max_thrust;
        let controller =
            FlightController::new(control.position, control.attitude, control.limits, control.construction);
        Self {
            plant,
            controller,
            state,
            arm: ArmMotion::stationary(q),
            disturbance: CouplingDisturbance::zero(),
            compensation: control.compensation,
            command: ControlCommand { thrust: 0.0, torque: Vec3::zeros(), accel: Vec3::zeros(), saturated: false },
            attitude_error: Vec3::zeros(),
            on_ground: state.position.z >= 0.0,
        }
    }

    pub fn mass(&self) -> f64 {
        self.plant.model.total_mass
    }

    /// Disturbance fed forward to both loops.
    pub fn feedforward(&self) -> CouplingDisturbance {
        match self.compensation {
            Compensation::Exact => self.disturbance,
            Compensation::Off => CouplingDisturbance::zero(),
        }
    }

    /// Position-loop tick with measured position and velocity.
    #[allow(clippy::too_many_arguments)]
    pub fn position_tick(
        &mut self,
        p: &Vec3,
        v: &Vec3,
        p_d: &Vec3,
        v_d: &Vec3,
        a_ref: &Vec3,
        psi_d: f64,
        dt: f64,
    ) -> Result<(), ControlError> {
        let ff = self.feedforward();
        let (m, g) = (self.mass(), self.plant.model.gravity);
        let attitude = self.state.attitude;
        self.controller.update_position(p, v, &attitude, p_d, v_d, a_ref, psi_d, &ff, m, g, dt)?;
        Ok(())
    }

    /// Motors idle while resting on the ground.
    pub fn idle(&mut self) {
        self.controller.idle(yaw_of(&self.state.attitude));
    }

    /// Attitude-loop tick with the measured body rate.
    pub fn attitude_tick(&mut self, omega: &Vec3) {
        let ff = self.feedforward();
        let (cmd, e_r) = self.controller.update_attitude(&self.state.attitude, omega, &ff);
        self.command = cmd;
        self.attitude_error = e_r;
    }

    /// One physics step; the arm follows its constant-acceleration segment
    /// and stops at joint limits. Ground contact at `z = 0` holds the vehicle
    /// level and at rest.
    pub fn physics_step(&mut self, wind: &Vec3, dt: f64) -> Result<(), DynamicsError> {
        let inputs = StepInputs {
            thrust: self.command.thrust,
            torque: self.command.torque,
            wind: *wind,
            arm: self.arm,
        };
        let (mut next, dist) = integrate_step(&self.plant, &self.state, &inputs, dt)?;
        self.disturbance = dist;
        let mut arm = self.arm.advanced(dt);
        for (i, &(lo, hi)) in self.plant.manipulator.joint_limits.iter().enumerate() {
            let a = arm.q.angles[i];
            if a < lo || a > hi {
                arm.q.angles[i] = a.clamp(lo, hi);
                arm.qd[i] = 0.0;
                arm.qdd[i] = 0.0;
            }
        }
        self.arm = arm;
        self.on_ground = next.position.z >= 0.0;
        if self.on_ground {
            next.position.z = 0.0;
            next.velocity = Vec3::zeros();
            next.body_rate = Vec3::zeros();
            next.attitude = rot_yaw(yaw_of(&next.attitude));
        }
        self.state = next;
        Ok(())
    }
}
