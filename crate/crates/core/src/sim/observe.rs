//! Ground-truth wrench synthesis, pose errors and the wrench-on-screw task.

use nalgebra::{Isometry3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::action::PokeAction;
use super::tools::{WRENCH_JAW_HALF_OPENING, WRENCH_JAW_TOP, WRENCH_MOUTH_BOTTOM};
use crate::geometry::{wrap_angle, Pose2};
use crate::scope::Observation;
use crate::wrench::{contact_wrench, inject_noise, Frame};

/// Wrenches both sensors read for `action` with the objects at the given true
/// poses; `n_pct` relative noise is added last.
pub fn synthesize_observation<R: Rng>(
    action_index: usize,
    action: &PokeAction,
    truth_t: &Pose2,
    truth_p: &Pose2,
    world_from_tool_ee: &Isometry3<f64>,
    n_pct: f64,
    rng: &mut R,
) -> Observation {
    let tool_ee = truth_t.to_isometry();
    let p_ee = tool_ee.transform_point(&action.tool_contact.into()).coords;
    let f_tool_world = world_from_tool_ee.rotation * (tool_ee.rotation * (-action.force * action.tool_normal));
    let f_tool_ee = world_from_tool_ee.rotation.inverse() * f_tool_world;
    let gamma_t = contact_wrench(&p_ee, &f_tool_ee, Frame::ToolEe);

    let probe_ee = truth_p.to_isometry();
    let q_ee = probe_ee.transform_point(&action.probe_contact.into()).coords;
    let f_probe_ee = action.world_from_probe_ee.rotation.inverse() * -f_tool_world;
    let gamma_p = contact_wrench(&q_ee, &f_probe_ee, Frame::ProbeEe);

    Observation {
        action: action_index,
        gamma_t: inject_noise(&gamma_t, n_pct, rng),
        gamma_p: inject_noise(&gamma_p, n_pct, rng),
        world_from_tool_ee: *world_from_tool_ee,
        world_from_probe_ee: action.world_from_probe_ee,
    }
}

/// Signed per-axis error and its summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub dx: f64,
    pub dz: f64,
    /// Wrapped rotation error (radians).
    pub dtheta: f64,
    pub translation: f64,
}

pub fn pose_error(estimate: &Pose2, truth: &Pose2) -> PoseError {
    let dx = estimate.x - truth.x;
    let dz = estimate.z - truth.z;
    PoseError {
        dx,
        dz,
        dtheta: wrap_angle(estimate.theta - truth.theta),
        translation: dx.hypot(dz),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScrewShape {
    Square,
    Cylinder,
}

/// Fitting the wrench mouth over a screw head, modelled in the wrench body
/// frame: the mouth is the rectangle between the jaw flats from the mouth
/// bottom to the jaw tips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub opening: f64,
    /// Square side length, or cylinder diameter.
    pub head_size: f64,
    pub shape: ScrewShape,
    /// Screw centre in the wrench frame, as planned.
    pub target: (f64, f64),
    pub mouth_bottom: f64,
    pub mouth_top: f64,
}

const MM: f64 = 1e-3;
const BOUNDARY_SLACK: f64 = 1e-12;

impl TaskSpec {
    /// Square head of 8.9 mm in the 12.7 mm mouth: 1.9 mm per side.
    pub fn tight() -> Self {
        Self {
            opening: 2.0 * WRENCH_JAW_HALF_OPENING,
            head_size: 8.9 * MM,
            shape: ScrewShape::Square,
            target: (0.0, 0.5 * (WRENCH_MOUTH_BOTTOM + WRENCH_JAW_TOP)),
            mouth_bottom: WRENCH_MOUTH_BOTTOM,
            mouth_top: WRENCH_JAW_TOP,
        }
    }

    /// Round head leaving 3.5 mm per side.
    pub fn loose() -> Self {
        Self {
            head_size: 2.0 * (WRENCH_JAW_HALF_OPENING - 3.5 * MM),
            shape: ScrewShape::Cylinder,
            ..Self::tight()
        }
    }

    pub fn tolerance(&self) -> f64 {
        (self.opening - self.head_size) / 2.0
    }
}

/// The screw is placed using the estimated pose; where it actually lands in
/// the true wrench frame is `truth^-1 * estimate * target`. Success when the
/// head there lies within the mouth (touching counts).
pub fn check_task_success(estimate: &Pose2, truth: &Pose2, task: &TaskSpec) -> bool {
    let rel = truth.inverse().compose(estimate).to_isometry();
    let centre = Vector3::new(task.target.0, 0.0, task.target.1);
    let half_open = task.opening / 2.0;
    let inside = |p: Vector3<f64>, pad: f64| {
        p.x.abs() + pad <= half_open + BOUNDARY_SLACK
            && p.z - pad >= task.mouth_bottom - BOUNDARY_SLACK
            && p.z + pad <= task.mouth_top + BOUNDARY_SLACK
    };
    match task.shape {
        ScrewShape::Square => {
            let h = task.head_size / 2.0;
            [(-h, -h), (h, -h), (h, h), (-h, h)]
                .into_iter()
                .all(|(dx, dz)| inside(rel.transform_point(&(centre + Vector3::new(dx, 0.0, dz)).into()).coords, 0.0))
        }
        ScrewShape::Cylinder => inside(rel.transform_point(&centre.into()).coords, task.head_size / 2.0),
    }
}
