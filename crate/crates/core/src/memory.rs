//! Contact memory across actions: expected contact points from earlier pokes,
//! the distance-to-surface loss they induce on new pose hypotheses, and the
//! dropout rule that forgets an action which contradicts the next one.

use std::collections::BTreeSet;

use nalgebra::Vector3;

use crate::geometry::{Pose2, Solid};
use crate::resample::softmin;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudEntry {
    pub action: usize,
    /// Expected contact point in the end-effector frame of the generating
    /// action. Scoring maps it into the body frame of each candidate pose.
    pub point_ee: Vector3<f64>,
    /// The same point in the body frame of the pose that generated it.
    pub point_body: Vector3<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContactCloud {
    pub tool: Vec<CloudEntry>,
    pub probe: Vec<CloudEntry>,
}

impl ContactCloud {
    pub fn is_empty(&self) -> bool {
        self.tool.is_empty() && self.probe.is_empty()
    }
}

/// One top-ranked pose pair as seen by the memory update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudSource {
    pub pose_t: Pose2,
    pub pose_p: Pose2,
    /// Score-weighted mean contact of each belief, end-effector frame.
    pub contact_t: Vector3<f64>,
    pub contact_p: Vector3<f64>,
    pub s_c: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemoryState {
    pub cloud: ContactCloud,
    pub seen_actions: BTreeSet<usize>,
    pub dropped_actions: BTreeSet<usize>,
    /// Mean consistency score of the top pairs at the end of the previous action.
    pub prev_mean_sc: Option<f64>,
}

impl MemoryState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_active(&self, action: usize) -> bool {
        !self.dropped_actions.contains(&action)
    }

    pub fn active_entries(&self) -> (impl Iterator<Item = &CloudEntry>, impl Iterator<Item = &CloudEntry>) {
        (
            self.cloud.tool.iter().filter(|e| self.is_active(e.action)),
            self.cloud.probe.iter().filter(|e| self.is_active(e.action)),
        )
    }

    pub fn has_active_entries(&self) -> bool {
        let (mut t, mut p) = self.active_entries();
        t.next().is_some() || p.next().is_some()
    }
}

/// Appends one entry per object per source pair for `action`. Weights are the
/// softmin of the pairs' consistency scores, so each action contributes unit
/// mass per object.
pub fn update_contact_cloud(state: &mut MemoryState, action: usize, sources: &[CloudSource], beta: f64) {
    if sources.is_empty() {
        return;
    }
    let costs: Vec<f64> = sources.iter().map(|s| s.s_c).collect();
    let weights = softmin(&costs, beta).unwrap_or_else(|| {
        log::warn!("degenerate memory weights; using uniform");
        vec![1.0 / sources.len() as f64; sources.len()]
    });
    for (src, w) in sources.iter().zip(weights) {
        let to_body_t = src.pose_t.to_isometry().inverse();
        let to_body_p = src.pose_p.to_isometry().inverse();
        state.cloud.tool.push(CloudEntry {
            action,
            point_ee: src.contact_t,
            point_body: to_body_t.transform_point(&src.contact_t.into()).coords,
            weight: w,
        });
        state.cloud.probe.push(CloudEntry {
            action,
            point_ee: src.contact_p,
            point_body: to_body_p.transform_point(&src.contact_p.into()).coords,
            weight: w,
        });
    }
    state.seen_actions.insert(action);
}

fn cloud_distance<'a>(entries: impl Iterator<Item = &'a CloudEntry>, pose: &Pose2, solid: &Solid) -> f64 {
    let body_from_ee = pose.to_isometry().inverse();
    entries
        .map(|e| e.weight * solid.signed_distance(&body_from_ee.transform_point(&e.point_ee.into()).coords).abs())
        .sum()
}

/// Weighted distance of the active contact cloud to both object surfaces under
/// the candidate poses. Zero for an empty cloud.
pub fn loss_memory(pose_t: &Pose2, pose_p: &Pose2, state: &MemoryState, solid_t: &Solid, solid_p: &Solid) -> f64 {
    let (tool, probe) = state.active_entries();
    cloud_distance(tool, pose_t, solid_t) + cloud_distance(probe, pose_p, solid_p)
}

/// Compares this action's step-0 mean consistency score against the previous
/// action's final one. On `mean_sc0 > delta_c * prev`, the previous action is
/// excluded from memory scoring and `true` is returned.
pub fn check_dropout(state: &mut MemoryState, action: usize, mean_sc0: f64, delta_c: f64) -> bool {
    let Some(prev) = state.prev_mean_sc else {
        return false;
    };
    if action == 0 || mean_sc0 <= delta_c * prev {
        return false;
    }
    state.dropped_actions.insert(action - 1);
    true
}

/// Rows of `(object, action, x, y, z, weight, dropped)` in the body frame of
/// the generating pose.
pub fn cloud_rows(state: &MemoryState) -> Vec<(&'static str, CloudEntry, bool)> {
    let tag = |name: &'static str, entries: &[CloudEntry]| {
        entries
            .iter()
            .map(|e| (name, *e, !state.is_active(e.action)))
            .collect::<Vec<_>>()
    };
    let mut rows = tag("tool", &state.cloud.tool);
    rows.extend(tag("probe", &state.cloud.probe));
    rows
}
