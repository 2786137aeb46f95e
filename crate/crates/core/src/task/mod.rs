//! Mission layer: hovering setpoints from vision, the flame-transfer
//! surrogate, the moving target base and the task state machine.

mod machine;
mod platform;
mod setpoint;
mod torch;

pub use machine::{
    step_task, ArmCommand, Directive, TaskMachine, TaskSensors, TaskState, TaskTiming, VehicleCommand,
};
pub use platform::{level_pose, platform_pose, FloatingPlatform};
pub use setpoint::{hovering_setpoint, HoverSetpoint, OperatingReference};
pub use torch::{ignition_check, ignition_idle, FireMode, TorchModel, TorchParams};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TaskError {
    #[error("observation is not valid")]
    InvalidObservation,
}
