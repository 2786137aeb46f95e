//! Synthetic marker camera and EPnP pose estimation of the target torch.
//!
//! The camera returns labelled marker pixels directly; blob segmentation is
//! not modelled. The estimated target pose is mapped through the camera
//! mount into Σ_B, which is what the hovering-setpoint logic consumes.

mod camera;
mod epnp;

pub use camera::{project_markers, CameraModel, MarkerImage, MarkerSet, Pixel};
pub use epnp::{estimate_pose_epnp, PnpSolution};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::QuadrotorState;
use crate::spatial::{Pose, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum VisionError {
    #[error("only {0} markers visible, need 4")]
    TargetNotVisible(usize),
    #[error("need at least 4 correspondences, got {0}")]
    InsufficientPoints(usize),
    #[error("marker configuration is degenerate (collinear or coincident)")]
    DegenerateConfiguration,
}

/// Estimated target torch pose relative to the vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetObservation {
    /// Target torch tip in Σ_B, m.
    pub p_t_body: Vec3,
    /// Heading of the target x axis projected on the Σ_B x-y plane, rad.
    pub psi_t_body: f64,
    /// Capture time, s.
    pub timestamp: f64,
    pub valid: bool,
    /// px; infinite when no estimate was produced.
    pub reprojection_rms: f64,
    pub visible: usize,
}

impl TargetObservation {
    pub fn invalid(timestamp: f64, visible: usize) -> Self {
        Self {
            p_t_body: Vec3::zeros(),
            psi_t_body: 0.0,
            timestamp,
            valid: false,
            reprojection_rms: f64::INFINITY,
            visible,
        }
    }
}

/// Acceptance rules for estimates and optional label corruption.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisionConfig {
    /// Estimates above this reprojection RMS are flagged invalid, px.
    pub rms_threshold: f64,
    /// Per-frame probability that two marker labels are swapped.
    pub swap_probability: f64,
}

impl Default for VisionConfig {
    fn default() -> Self {
        Self { rms_threshold: 2.0, swap_probability: 0.0 }
    }
}

/// Maps a camera-frame target pose into a body-frame observation.
pub fn observation_in_body(
    solution: &PnpSolution,
    camera: &CameraModel,
    timestamp: f64,
    rms_threshold: f64,
    visible: usize,
) -> TargetObservation {
    let body = camera.mount().compose(&solution.pose);
    let r = body.rotation.matrix();
    TargetObservation {
        p_t_body: body.translation,
        psi_t_body: r[(1, 0)].atan2(r[(0, 0)]),
        timestamp,
        valid: solution.reprojection_rms < rms_threshold,
        reprojection_rms: solution.reprojection_rms,
        visible,
    }
}

/// One camera frame: image the target, optionally corrupt labels, estimate
/// and map to Σ_B. Failures become invalid observations.
#[allow(clippy::too_many_arguments)]
pub fn observe<R: Rng + ?Sized>(
    target: &Pose,
    quad: &QuadrotorState,
    camera: &CameraModel,
    markers: &MarkerSet,
    config: &VisionConfig,
    timestamp: f64,
    rng: &mut R,
) -> TargetObservation {
    let mut images = match project_markers(target, quad, camera, markers, Some(&mut *rng)) {
        Ok(images) => images,
        Err(VisionError::TargetNotVisible(n)) => return TargetObservation::invalid(timestamp, n),
        Err(_) => return TargetObservation::invalid(timestamp, 0),
    };
    if config.swap_probability > 0.0 && rng.random::<f64>() < config.swap_probability {
        let a = rng.random_range(0..images.len());
        let b = (a + 1 + rng.random_range(0..images.len() - 1)) % images.len();
        let tmp = images[a].index;
        images[a].index = images[b].index;
        images[b].index = tmp;
    }
    match estimate_pose_epnp(&markers.points, &images, camera) {
        Ok(sol) => observation_in_body(&sol, camera, timestamp, config.rms_threshold, images.len()),
        Err(_) => TargetObservation::invalid(timestamp, images.len()),
    }
}
