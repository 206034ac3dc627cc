use std::f64::consts::PI;

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Planar offset of a grasped object from its nominal grasp, in the
/// end-effector X-Z plane. Rotation is about the end-effector Y axis
/// (the jaw-closing axis), which carries no translation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub z: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, z: f64, theta: f64) -> Self {
        Self {
            x,
            z,
            theta: wrap_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.z.is_finite() && self.theta.is_finite()
    }

    /// End-effector-from-body transform.
    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(self.x, 0.0, self.z),
            UnitQuaternion::from_axis_angle(&Vector3::y_axis(), self.theta),
        )
    }

    /// Inverse of [`Pose2::to_isometry`]; the out-of-plane parts of `iso` are
    /// ignored.
    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let r = iso.rotation.to_rotation_matrix();
        let m = r.matrix();
        let theta = m[(0, 2)].atan2(m[(0, 0)]);
        Self::new(iso.translation.x, iso.translation.z, theta)
    }

    pub fn compose(&self, other: &Pose2) -> Pose2 {
        Pose2::from_isometry(&(self.to_isometry() * other.to_isometry()))
    }

    pub fn inverse(&self) -> Pose2 {
        Pose2::from_isometry(&self.to_isometry().inverse())
    }
}
