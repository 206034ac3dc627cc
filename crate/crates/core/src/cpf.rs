//! Contact particle filter for a grasped object.
//!
//! Given one arm's measured wrench and a hypothesised object pose, particles
//! over the object's surface samples are weighted by how well a point force at
//! each location explains the wrench, resampled, and moved along the surface.
//! The resulting belief both localises the contact and scores the pose.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Pose2;
use crate::model::ObjectModel;
use crate::resample::systematic;
use crate::segmentation::{init_clps, init_uniform, ClpSeed, SegmentationError};
use crate::wrench::{pull_penalty, wrench_error, ForceSolver, SensorNoise, Wrench, WrenchNorm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClpInit {
    /// `n_face` particles on every segmented face.
    Segmented { n_face: usize },
    /// `n_clp` particles uniform over all face samples.
    Uniform { n_clp: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpfParams {
    pub init: ClpInit,
    pub max_steps: usize,
    /// Minimum improvement of the best nll that resets the patience counter.
    pub tol_conv: f64,
    pub patience: usize,
    pub elitism: bool,
    /// Probability of a move to a same-face neighbour; otherwise the particle
    /// jumps to a random sample on a random face.
    pub local_move_prob: f64,
    /// Penalty weight on solved forces that pull away from the surface.
    pub pull_weight: f64,
    pub norm: WrenchNorm,
    pub record_trace: bool,
}

impl Default for CpfParams {
    fn default() -> Self {
        Self {
            init: ClpInit::Uniform { n_clp: 60 },
            max_steps: 40,
            tol_conv: 1e-3,
            patience: 5,
            elitism: true,
            local_move_prob: 0.9,
            pull_weight: 10.0,
            norm: WrenchNorm::L1,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactParticle {
    /// Contact location in the end-effector frame (m).
    pub r: Vector3<f64>,
    /// Solved contact force in the end-effector frame (N).
    pub f: Vector3<f64>,
    /// Normalised weight.
    pub s: f64,
    pub face: usize,
    /// Index of the surface sample the particle sits on.
    pub point: usize,
    pub nll: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpfTraceRow {
    pub step: usize,
    pub best_nll: f64,
    pub mean_r: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct ContactBelief {
    pub particles: Vec<ContactParticle>,
    pub converged: bool,
    pub steps_taken: usize,
    pub best_nll: f64,
    pub trace: Vec<CpfTraceRow>,
}

impl ContactBelief {
    pub fn n_clp(&self) -> usize {
        self.particles.len()
    }

    /// Score-weighted mean contact location.
    pub fn mean_contact(&self) -> Vector3<f64> {
        self.particles.iter().map(|p| p.r * p.s).sum()
    }

    pub fn best_particle(&self) -> &ContactParticle {
        self.particles
            .iter()
            .min_by(|a, b| a.nll.total_cmp(&b.nll))
            .expect("belief is non-empty")
    }

    /// Wrench error of the belief: `sum_i s_i |Gamma_i - gamma|`.
    pub fn wrench_error(&self, gamma: &Wrench, norm: WrenchNorm) -> f64 {
        wrench_error(self.particles.iter().map(|p| (p.r, p.f, p.s)), gamma, norm)
    }

    /// Weight mass on distinct samples: duplicates merged, ordered by sample
    /// index. Sums over the support equal sums over the particles.
    pub fn support(&self) -> Vec<(Vector3<f64>, Vector3<f64>, f64)> {
        let mut idx: Vec<usize> = (0..self.particles.len()).collect();
        idx.sort_by_key(|&i| self.particles[i].point);
        let mut out: Vec<(usize, Vector3<f64>, Vector3<f64>, f64)> = Vec::new();
        for i in idx {
            let p = &self.particles[i];
            match out.last_mut() {
                Some(last) if last.0 == p.point => last.3 += p.s,
                _ => out.push((p.point, p.r, p.f, p.s)),
            }
        }
        out.into_iter().map(|(_, r, f, s)| (r, f, s)).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CpfError {
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
}

struct Evaluated {
    r: Vector3<f64>,
    f: Vector3<f64>,
    nll: f64,
}

/// Runs the contact particle filter on `model` posed at `pose` against the
/// measured wrench `gamma` (expressed in this arm's end-effector frame).
pub fn cpfgrasp_run<R: Rng>(
    model: &ObjectModel,
    pose: &Pose2,
    gamma: &Wrench,
    noise: &SensorNoise,
    params: &CpfParams,
    rng: &mut R,
) -> Result<ContactBelief, CpfError> {
    let faces = &model.faces;
    let mut state: Vec<ClpSeed> = match params.init {
        ClpInit::Segmented { n_face } => init_clps(faces, n_face, rng)?,
        ClpInit::Uniform { n_clp } => init_uniform(faces, n_clp, rng)?,
    };
    let n = state.len();
    let iso = pose.to_isometry();
    let solver = ForceSolver::new(gamma, noise);
    let eval = |seed: &ClpSeed| -> Evaluated {
        let r = iso.transform_point(&model.samples.points[seed.point].into()).coords;
        let normal = iso.rotation * model.samples.normals[seed.point];
        let sol = solver.solve(&r);
        Evaluated {
            r,
            f: sol.force,
            nll: sol.nll + pull_penalty(&sol.force, &normal, params.pull_weight),
        }
    };

    let mut best: Option<(ClpSeed, f64)> = None;
    let mut best_nll = f64::INFINITY;
    let mut stall = 0;
    let mut trace = Vec::new();
    let mut step = 0;
    loop {
        let evaluated: Vec<Evaluated> = state.iter().map(&eval).collect();
        let (arg, min_nll) = evaluated
            .iter()
            .enumerate()
            .map(|(i, e)| (i, e.nll))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty population");
        let weights: Vec<f64> = evaluated.iter().map(|e| (-(e.nll - min_nll)).exp()).collect();
        let total: f64 = weights.iter().sum();

        if min_nll < best_nll - params.tol_conv {
            stall = 0;
        } else {
            stall += 1;
        }
        if min_nll < best_nll {
            best_nll = min_nll;
            best = Some((state[arg], min_nll));
        }
        step += 1;

        if params.record_trace {
            let mean_r = evaluated
                .iter()
                .zip(&weights)
                .map(|(e, w)| e.r * (w / total))
                .sum();
            trace.push(CpfTraceRow {
                step: step - 1,
                best_nll,
                mean_r,
            });
        }

        let converged = stall >= params.patience;
        if converged || step >= params.max_steps {
            let particles = state
                .iter()
                .zip(evaluated)
                .zip(&weights)
                .map(|((seed, e), w)| ContactParticle {
                    r: e.r,
                    f: e.f,
                    s: w / total,
                    face: seed.face,
                    point: seed.point,
                    nll: e.nll,
                })
                .collect();
            return Ok(ContactBelief {
                particles,
                converged,
                steps_taken: step,
                best_nll,
                trace,
            });
        }

        let picks = systematic(&weights, n, rng);
        let mut next: Vec<ClpSeed> = picks
            .into_iter()
            .map(|i| diffuse(model, state[i], params.local_move_prob, rng))
            .collect();
        if params.elitism {
            if let Some((elite, _)) = best {
                next[0] = elite;
            }
        }
        state = next;
    }
}

fn diffuse<R: Rng>(model: &ObjectModel, seed: ClpSeed, local_prob: f64, rng: &mut R) -> ClpSeed {
    let faces = &model.faces.faces;
    if rng.random::<f64>() < local_prob {
        let nn = &model.neighbors[seed.point];
        if !nn.is_empty() {
            return ClpSeed {
                point: nn[rng.random_range(0..nn.len())],
                face: seed.face,
            };
        }
        return seed;
    }
    let face = rng.random_range(0..faces.len());
    let members = &faces[face].indices;
    ClpSeed {
        point: members[rng.random_range(0..members.len())],
        face,
    }
}

/// Diagnostics of a finished belief against a known contact location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpfMetrics {
    pub position_error: f64,
    pub wrench_error: f64,
    pub steps: usize,
    pub n_clp: usize,
}

pub fn cpf_metrics(belief: &ContactBelief, truth: &Vector3<f64>, gamma: &Wrench, norm: WrenchNorm) -> CpfMetrics {
    CpfMetrics {
        position_error: (belief.mean_contact() - truth).norm(),
        wrench_error: belief.wrench_error(gamma, norm),
        steps: belief.steps_taken,
        n_clp: belief.n_clp(),
    }
}
