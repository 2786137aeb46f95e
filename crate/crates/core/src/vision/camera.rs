use nalgebra::Vector2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::VisionError;
use crate::dynamics::QuadrotorState;
use crate::spatial::{rot_y, Mat3, Pose, RotationMatrix, Vec3};

pub type Pixel = Vector2<f64>;

/// Pinhole camera rigidly mounted on the vehicle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Camera pitch about `y_B`, rad; negative looks down.
    pub pitch: f64,
    /// Camera yaw about `z_B`, rad; negative looks left.
    pub yaw: f64,
    /// Optical centre in Σ_B, m.
    pub position: Vec3,
    /// Pixel noise standard deviation, px.
    pub pixel_noise: f64,
    /// Points closer than this along the optical axis are not imaged, m.
    pub near_plane: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            fx: 1000.0,
            fy: 1000.0,
            cx: 640.0,
            cy: 512.0,
            width: 1280,
            height: 1024,
            pitch: (-30f64).to_radians(),
            yaw: (-60f64).to_radians(),
            position: Vec3::new(0.70, 0.60, 0.20),
            pixel_noise: 1.0,
            near_plane: 0.05,
        }
    }
}

/// Optical axes (x right, y down, z forward) expressed in a
/// forward-right-down body frame before the mount angles are applied.
fn optical_to_body_axes() -> Mat3 {
    Mat3::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0)
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err("focal lengths must be positive".into());
        }
        if self.width == 0 || self.height == 0 {
            return Err("image size must be positive".into());
        }
        if !(self.pixel_noise >= 0.0 && self.near_plane > 0.0) {
            return Err("pixel noise must be >= 0 and near plane > 0".into());
        }
        Ok(())
    }

    /// Σ_C to Σ_B rotation: yaw about `z_B`, then pitch about the yawed `y`.
    pub fn mount_rotation(&self) -> RotationMatrix {
        let p = RotationMatrix::from_matrix_unchecked(optical_to_body_axes());
        crate::spatial::rot_yaw(self.yaw) * rot_y(self.pitch) * p
    }

    /// Σ_C to Σ_B pose.
    pub fn mount(&self) -> Pose {
        Pose::new(self.mount_rotation(), self.position)
    }

    /// Optical axis direction in Σ_B.
    pub fn boresight(&self) -> Vec3 {
        self.mount_rotation() * Vec3::z()
    }

    /// Pinhole projection of a Σ_C point. `None` behind the near plane.
    pub fn project(&self, p_c: &Vec3) -> Option<Pixel> {
        if p_c.z < self.near_plane {
            return None;
        }
        Some(Pixel::new(self.fx * p_c.x / p_c.z + self.cx, self.fy * p_c.y / p_c.z + self.cy))
    }

    pub fn in_image(&self, px: &Pixel) -> bool {
        px.x >= 0.0 && px.y >= 0.0 && px.x < self.width as f64 && px.y < self.height as f64
    }

    /// Unit-depth bearing for a pixel.
    pub fn normalized(&self, px: &Pixel) -> Vector2<f64> {
        Vector2::new((px.x - self.cx) / self.fx, (px.y - self.cy) / self.fy)
    }
}

/// Marker positions on the target, in the target frame (origin at the
/// target torch tip, axes forward-right-down).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerSet {
    pub points: Vec<Vec3>,
}

impl Default for MarkerSet {
    /// Eight markers spanning 0.3 m on two levels below the tip.
    fn default() -> Self {
        Self {
            points: vec![
                Vec3::new(0.15, 0.0, 0.10),
                Vec3::new(-0.15, 0.0, 0.10),
                Vec3::new(0.0, 0.15, 0.10),
                Vec3::new(0.0, -0.15, 0.10),
                Vec3::new(0.10, 0.10, 0.30),
                Vec3::new(-0.10, 0.10, 0.30),
                Vec3::new(0.10, -0.10, 0.30),
                Vec3::new(-0.10, -0.10, 0.30),
            ],
        }
    }
}

impl MarkerSet {
    pub fn validate(&self) -> Result<(), String> {
        if self.points.len() < 4 {
            return Err(format!("need at least 4 markers, got {}", self.points.len()));
        }
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                if (a - b).norm() <= 0.01 {
                    return Err("markers closer than 1 cm".into());
                }
            }
        }
        Ok(())
    }

    /// True when no plane passes within `tol` of every marker.
    pub fn is_non_coplanar(&self, tol: f64) -> bool {
        let n = self.points.len() as f64;
        let c = self.points.iter().sum::<Vec3>() / n;
        let cov = self.points.iter().fold(Mat3::zeros(), |acc, p| {
            let d = p - c;
            acc + d * d.transpose()
        }) / n;
        cov.symmetric_eigenvalues().min().max(0.0).sqrt() > tol
    }
}

/// A marker image with its correspondence index into the [`MarkerSet`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarkerImage {
    pub index: usize,
    pub pixel: Pixel,
}

/// Images the markers of a target at `target` (target to Σ_I) seen from
/// the vehicle `quad`. Markers outside the frame or behind the camera are
/// dropped. Gaussian pixel noise is added when `rng` is given.
pub fn project_markers<R: Rng + ?Sized>(
    target: &Pose,
    quad: &QuadrotorState,
    camera: &CameraModel,
    markers: &MarkerSet,
    rng: Option<&mut R>,
) -> Result<Vec<MarkerImage>, VisionError> {
    let body_from_world = Pose::new(quad.attitude, quad.position).inverse();
    let cam_from_body = camera.mount().inverse();
    let cam_from_target = cam_from_body.compose(&body_from_world).compose(target);
    let mut images: Vec<MarkerImage> = markers
        .points
        .iter()
        .enumerate()
        .filter_map(|(index, m)| {
            let px = camera.project(&cam_from_target.apply(m))?;
            camera.in_image(&px).then_some(MarkerImage { index, pixel: px })
        })
        .collect();
    if let Some(rng) = rng {
        if camera.pixel_noise > 0.0 {
            let normal = Normal::new(0.0, camera.pixel_noise).expect("finite sigma");
            for im in &mut images {
                im.pixel.x += normal.sample(rng);
                im.pixel.y += normal.sample(rng);
            }
        }
    }
    if images.len() < 4 {
        return Err(VisionError::TargetNotVisible(images.len()));
    }
    Ok(images)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::orthonormality_error;
    use approx::assert_relative_eq;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn optical_axis_hits_principal_point() {
        let cam = CameraModel::default();
        let px = cam.project(&Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert_relative_eq!(px, Pixel::new(cam.cx, cam.cy));
    }

    #[test]
    fn doubling_depth_halves_offset() {
        let cam = CameraModel::default();
        let c = Pixel::new(cam.cx, cam.cy);
        let a = cam.project(&Vec3::new(0.1, -0.05, 1.0)).unwrap() - c;
        let b = cam.project(&Vec3::new(0.1, -0.05, 2.0)).unwrap() - c;
        assert_relative_eq!(b, a * 0.5, epsilon = 1e-12);
        assert!(cam.project(&Vec3::new(0.0, 0.0, -1.0)).is_none());
    }

    #[test]
    fn mount_rotation_looks_forward_left_down() {
        let cam = CameraModel::default();
        let r = cam.mount_rotation();
        assert!(orthonormality_error(r.matrix()) < 1e-15);
        let b = cam.boresight();
        // cos30 cos60, -cos30 sin60, sin30
        assert_relative_eq!(b, Vec3::new(0.433_012_701_892_219_3, -0.75, 0.5), epsilon = 1e-15);
        let level = CameraModel { pitch: 0.0, yaw: 0.0, ..cam };
        assert_relative_eq!(level.boresight(), Vec3::x(), epsilon = 1e-15);
        assert_relative_eq!(level.mount_rotation() * Vec3::x(), Vec3::y(), epsilon = 1e-15);
    }

    #[test]
    fn default_markers_valid() {
        let m = MarkerSet::default();
        m.validate().unwrap();
        assert!(m.is_non_coplanar(0.01));
        let flat = MarkerSet { points: m.points[..4].to_vec() };
        assert!(!flat.is_non_coplanar(1e-9));
        let short = MarkerSet { points: m.points[..3].to_vec() };
        assert!(short.validate().is_err());
    }

    #[test]
    fn markers_out_of_view_are_dropped() {
        let cam = CameraModel::default();
        let quad = QuadrotorState::at_rest(Vec3::zeros(), 0.0);
        // target behind the vehicle
        let target = Pose::new(RotationMatrix::identity(), Vec3::new(-3.0, 0.0, 0.0));
        let err = project_markers::<ChaCha8Rng>(&target, &quad, &cam, &MarkerSet::default(), None);
        assert_eq!(err, Err(VisionError::TargetNotVisible(0)));
    }
}
