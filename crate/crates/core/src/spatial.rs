//! Frames, rotations, and the handful of 3x3 helpers used everywhere else.
//!
//! The inertial frame is NED: gravity points along `+e3`, altitude is `-z`.
//! The body frame is forward-right-down. Rotations are kept as full 3x3
//! matrices; quaternions only show up in logs.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type RotationMatrix = Rotation3<f64>;

/// Tolerance on the symmetric part accepted by [`unskew`].
pub const ANTISYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("matrix is not antisymmetric (symmetric part norm {0:e})")]
    NonAntisymmetric(f64),
    #[error("matrix is rank deficient, cannot project onto SO(3)")]
    Degenerate,
}

/// The coordinate frame a vector is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameTag {
    /// Σ_I, north-east-down.
    Inertial,
    /// Σ_B, forward-right-down, origin at the quadrotor reference point.
    Body,
    /// Σ_M, manipulator base. Forward-left-up with the default mount.
    ManipBase,
    /// Σ_C, optical frame: x right, y down, z along the optical axis.
    Camera,
}

impl FrameTag {
    pub fn symbol(self) -> &'static str {
        match self {
            FrameTag::Inertial => "I",
            FrameTag::Body => "B",
            FrameTag::ManipBase => "M",
            FrameTag::Camera => "C",
        }
    }
}

pub fn e1() -> Vec3 {
    Vec3::x()
}

pub fn e2() -> Vec3 {
    Vec3::y()
}

pub fn e3() -> Vec3 {
    Vec3::z()
}

/// Cross-product matrix: `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`]. Rejects matrices whose symmetric part exceeds
/// [`ANTISYMMETRY_TOL`].
pub fn unskew(m: &Mat3) -> Result<Vec3, SpatialError> {
    let sym = (m + m.transpose()) * 0.5;
    let sym_norm = sym.norm();
    if !(sym_norm <= ANTISYMMETRY_TOL) {
        return Err(SpatialError::NonAntisymmetric(sym_norm));
    }
    Ok(vee(m))
}

/// Unchecked vee map; averages the two off-diagonal copies of each entry.
pub(crate) fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Rotation about the inertial z axis (roll = pitch = 0).
pub fn rot_yaw(psi: f64) -> RotationMatrix {
    let (s, c) = psi.sin_cos();
    RotationMatrix::from_matrix_unchecked(Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
}

pub fn rot_x(a: f64) -> RotationMatrix {
    let (s, c) = a.sin_cos();
    RotationMatrix::from_matrix_unchecked(Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
}

pub fn rot_y(a: f64) -> RotationMatrix {
    let (s, c) = a.sin_cos();
    RotationMatrix::from_matrix_unchecked(Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
}

/// Z-Y-X (yaw, pitch, roll) composition.
pub fn rot_zyx(yaw: f64, pitch: f64, roll: f64) -> RotationMatrix {
    rot_yaw(yaw) * rot_y(pitch) * rot_x(roll)
}

/// Heading of the body x axis projected on the horizontal plane.
pub fn yaw_of(r: &RotationMatrix) -> f64 {
    let m = r.matrix();
    m[(1, 0)].atan2(m[(0, 0)])
}

/// (roll, pitch, yaw) in the Z-Y-X convention.
pub fn euler_zyx(r: &RotationMatrix) -> Vec3 {
    let m = r.matrix();
    let pitch = (-m[(2, 0)]).clamp(-1.0, 1.0).asin();
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    Vec3::new(roll, pitch, yaw)
}

/// Geodesic angle between two rotations.
pub fn rotation_distance(a: &RotationMatrix, b: &RotationMatrix) -> f64 {
    let cos = ((a.transpose() * b).matrix().trace() - 1.0) * 0.5;
    cos.clamp(-1.0, 1.0).acos()
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.sin().atan2(a.cos());
    if w <= -std::f64::consts::PI {
        w + 2.0 * std::f64::consts::PI
    } else {
        w
    }
}

/// Nearest rotation in the Frobenius sense (polar projection via SVD).
pub fn reorthonormalize(m: &Mat3) -> Result<RotationMatrix, SpatialError> {
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(SpatialError::Degenerate),
    };
    let smin = svd.singular_values.min();
    if !(smin > 1e-9 * svd.singular_values.max().max(1e-300)) {
        return Err(SpatialError::Degenerate);
    }
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        // flip the column paired with the smallest singular value
        let k = svd.singular_values.imin();
        u.column_mut(k).neg_mut();
        r = u * v_t;
    }
    Ok(RotationMatrix::from_matrix_unchecked(r))
}

/// Rigid transform: maps a point `x` in the child frame to
/// `rotation * x + translation` in the parent frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: RotationMatrix,
    pub translation: Vec3,
}

impl Pose {
    pub fn new(rotation: RotationMatrix, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(RotationMatrix::identity(), Vec3::zeros())
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.rotation * x + self.translation
    }

    pub fn inverse(&self) -> Self {
        let r = self.rotation.transpose();
        Self::new(r, -(r * self.translation))
    }

    /// `self * other`: first `other`, then `self`.
    pub fn compose(&self, other: &Pose) -> Self {
        Self::new(self.rotation * other.rotation, self.apply(&other.translation))
    }
}

/// Max-abs deviation of `R^T R` from identity, plus `|det R - 1|`.
pub fn orthonormality_error(r: &Mat3) -> f64 {
    let e = (r.transpose() * r - Mat3::identity()).abs().max();
    e.max((r.determinant() - 1.0).abs())
}
