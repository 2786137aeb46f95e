//! Simulation, control, and vision for an aerial manipulator that lights a
//! torch held by another robot.
//!
//! Modules follow the data flow of one control tick: [`spatial`] helpers,
//! arm [`kinematics`], coupled vehicle [`dynamics`], the cascade flight
//! controller in [`control`], marker-based pose estimation in [`vision`], the
//! mission logic in [`task`], and the multirate harness in [`sim`].

pub mod control;
pub mod dynamics;
pub mod kinematics;
pub mod sim;
pub mod spatial;
pub mod task;
pub mod vision;
