//! Multi-action trials: synthesise observations for each poke, run the pose
//! filter action after action with a shared memory, and score the estimates.

use nalgebra::Isometry3;
use serde::{Deserialize, Serialize};

use super::action::{curated_action, curated_set, random_action, ActionStrategy, PokeAction};
use super::observe::{check_task_success, pose_error, synthesize_observation, PoseError, TaskSpec};
use super::tools::{make_tool_mesh, Tool};
use super::SimError;
use crate::geometry::{Pose2, TriMesh};
use crate::memory::MemoryState;
use crate::model::ObjectModel;
use crate::par::Exec;
use crate::rng::stream_rng;
use crate::scope::{init_pairs, scope_action, FilterConfig, ScopeContext, TraceRow};
use crate::segmentation::SegmentationParams;
use crate::wrench::SensorNoise;

const INIT_STREAM: u64 = 0x696e_6974;
const OBSERVE_STREAM: u64 = 0x6f62_7376;
const ACTION_STREAM: u64 = 0x6163_746e;

/// How one object is sampled and segmented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    /// Surface samples per square metre.
    pub density: f64,
    pub sample_seed: u64,
    pub segmentation: SegmentationParams,
}

impl ObjectSpec {
    pub fn tool_default() -> Self {
        Self {
            density: 2.5e5,
            sample_seed: 1,
            segmentation: SegmentationParams::default(),
        }
    }

    pub fn probe_default() -> Self {
        Self {
            density: 1.0e6,
            sample_seed: 2,
            segmentation: SegmentationParams {
                epsilon: 3e-3,
                ..SegmentationParams::default()
            },
        }
    }

    pub fn build(&self, name: &str, mesh: TriMesh) -> Result<ObjectModel, SimError> {
        Ok(ObjectModel::new(name, mesh, self.density, self.sample_seed, &self.segmentation)?)
    }
}

/// A tool, the probe, and the sequence of pokes to perform.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub tool: Tool,
    pub tool_model: ObjectModel,
    pub probe_model: ObjectModel,
    pub actions: Vec<PokeAction>,
    pub task: TaskSpec,
}

impl Scenario {
    /// Builds a scenario from procedural meshes.
    pub fn procedural(
        tool: Tool,
        tool_spec: &ObjectSpec,
        probe_spec: &ObjectSpec,
        strategy: &ActionStrategy,
        force: f64,
        action_seed: u64,
    ) -> Result<Self, SimError> {
        let tool_mesh = make_tool_mesh(tool)?;
        let probe_mesh = make_tool_mesh(Tool::Probe)?;
        Self::from_meshes(tool, tool_mesh, probe_mesh, tool_spec, probe_spec, strategy, force, action_seed)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_meshes(
        tool: Tool,
        tool_mesh: TriMesh,
        probe_mesh: TriMesh,
        tool_spec: &ObjectSpec,
        probe_spec: &ObjectSpec,
        strategy: &ActionStrategy,
        force: f64,
        action_seed: u64,
    ) -> Result<Self, SimError> {
        let tool_model = tool_spec.build(tool.name(), tool_mesh)?;
        let probe_model = probe_spec.build("probe", probe_mesh)?;
        let probe = probe_model.mesh();
        let actions = match strategy {
            ActionStrategy::Curated { pokes } => {
                let pokes = pokes.clone().unwrap_or_else(|| curated_set(tool));
                pokes
                    .iter()
                    .map(|p| curated_action(tool, p, probe, force).ok_or(SimError::NoCuratedActions(tool)))
                    .collect::<Result<Vec<_>, _>>()?
            }
            ActionStrategy::Random { count } => {
                let mut rng = stream_rng(&[action_seed, ACTION_STREAM]);
                (0..*count)
                    .map(|_| random_action(&tool_model.samples, probe, force, &mut rng))
                    .collect()
            }
        };
        if actions.is_empty() {
            return Err(SimError::NoCuratedActions(tool));
        }
        Ok(Self {
            tool,
            tool_model,
            probe_model,
            actions,
            task: TaskSpec::tight(),
        })
    }

    /// The same scenario restricted to a subset of its actions.
    pub fn with_actions(&self, indices: &[usize]) -> Self {
        Self {
            actions: indices.iter().map(|&i| self.actions[i]).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    pub filter: FilterConfig,
    pub sensor_sigma: (f64, f64),
    /// Relative wrench noise injected into the synthetic readings.
    pub noise_pct: f64,
    pub include_gt: bool,
    pub record_trace: bool,
}

impl Default for TrialOptions {
    fn default() -> Self {
        let s = SensorNoise::default();
        let c = s.covariance();
        Self {
            filter: FilterConfig::default(),
            sensor_sigma: (c[(0, 0)].sqrt(), c[(3, 3)].sqrt()),
            noise_pct: 0.0,
            include_gt: false,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionRecord {
    pub action: usize,
    pub estimate_t: Pose2,
    pub estimate_p: Pose2,
    pub error_t: PoseError,
    pub error_p: PoseError,
    pub task_success: bool,
    pub dropout: bool,
    pub best_s_opp: f64,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub seed: u64,
    pub actions: Vec<ActionRecord>,
    pub trace: Vec<TraceRow>,
    pub best_per_step: Vec<Vec<f64>>,
    pub memory: MemoryState,
}

impl TrialResult {
    pub fn final_record(&self) -> &ActionRecord {
        self.actions.last().expect("trial has actions")
    }
}

/// Runs one trial. Both objects truly sit at the zero pose in their grippers
/// and the tool's end-effector frame is the world frame.
pub fn run_trial(scn: &Scenario, opts: &TrialOptions, seed: u64, exec: Exec) -> Result<TrialResult, SimError> {
    let sensor = SensorNoise::diagonal(opts.sensor_sigma.0, opts.sensor_sigma.1);
    let truth = Pose2::identity();
    let world_from_tool_ee = Isometry3::identity();
    let ctx = ScopeContext {
        tool: &scn.tool_model,
        probe: &scn.probe_model,
        cfg: &opts.filter,
        sensor: &sensor,
        exec,
        seed,
        record_trace: opts.record_trace,
    };
    let mut pairs = init_pairs(&opts.filter, opts.include_gt, &mut stream_rng(&[seed, INIT_STREAM]));
    let mut memory = MemoryState::new();
    let mut records = Vec::with_capacity(scn.actions.len());
    let mut trace = Vec::new();
    let mut best_per_step = Vec::new();
    for (a, action) in scn.actions.iter().enumerate() {
        let mut rng = stream_rng(&[seed, a as u64, OBSERVE_STREAM]);
        let obs = synthesize_observation(a, action, &truth, &truth, &world_from_tool_ee, opts.noise_pct, &mut rng);
        let outcome = scope_action(&ctx, &obs, &pairs, &mut memory)?;
        let best = outcome.best();
        records.push(ActionRecord {
            action: a,
            estimate_t: best.pose_t,
            estimate_p: best.pose_p,
            error_t: pose_error(&best.pose_t, &truth),
            error_p: pose_error(&best.pose_p, &truth),
            task_success: check_task_success(&best.pose_t, &truth, &scn.task),
            dropout: outcome.dropout,
            best_s_opp: best.s_opp(),
        });
        best_per_step.push(outcome.best_per_step.clone());
        trace.extend(outcome.trace);
        pairs = outcome.pairs;
    }
    Ok(TrialResult {
        seed,
        actions: records,
        trace,
        best_per_step,
        memory,
    })
}
