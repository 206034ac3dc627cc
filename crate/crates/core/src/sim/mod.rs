//! Synthetic bimanual poking environment.

pub mod action;
pub mod observe;
pub mod pipeline;
pub mod tools;

pub use action::{curated_action, curated_set, place_probe, random_action, ActionStrategy, CuratedPoke, PokeAction, DEFAULT_FORCE};
pub use observe::{check_task_success, pose_error, synthesize_observation, PoseError, ScrewShape, TaskSpec};
pub use pipeline::{run_trial, ActionRecord, ObjectSpec, Scenario, TrialOptions, TrialResult};
pub use tools::{make_tool_mesh, Tool, UnknownTool};

use crate::geometry::GeometryError;
use crate::scope::ScopeError;
use crate::segmentation::SegmentationError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
    #[error(transparent)]
    Scope(#[from] ScopeError),
    #[error("no curated actions for {0}")]
    NoCuratedActions(Tool),
}
