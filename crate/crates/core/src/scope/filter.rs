use std::sync::Arc;

use nalgebra::Isometry3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::loss::{
    loss_contact, loss_force_align, loss_penetration, loss_wrench, score_consistency, score_opp, world_support,
    LossTerms, LossWeights,
};
use crate::cpf::{cpfgrasp_run, ContactBelief, CpfError, CpfParams};
use crate::geometry::{penetration_count, Pose2, DEFAULT_PENETRATION_MARGIN};
use crate::memory::{check_dropout, loss_memory, update_contact_cloud, CloudSource, MemoryState};
use crate::model::ObjectModel;
use crate::par::{map_slice, Exec};
use crate::resample::{softmin, systematic};
use crate::rng::stream_rng;
use crate::wrench::{Frame, SensorNoise, Wrench};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub n_opp: usize,
    pub n_os: usize,
    pub n_top: usize,
    pub eps_pp: f64,
    /// Base noise scales `(x, z, theta)` in metres and radians.
    pub sigma: [f64; 3],
    /// Per-step anneal factor.
    pub gamma_a: f64,
    /// Per-action shrink `max(rho_floor, rho_decay^(n_A + 1))`.
    pub rho_decay: f64,
    pub rho_floor: f64,
    /// Noise multiplier for the rest of an action after a memory dropout.
    pub dropout_boost: f64,
    pub delta_c: f64,
    /// Half-widths `(x, z, theta)` of the initial pose box.
    pub init_range: [f64; 3],
    /// Softmin temperature for resampling and memory weights.
    pub beta: f64,
    pub penetration_margin: f64,
    pub weights: LossWeights,
    pub cpf: CpfParams,
    /// Drive every pair's contact filters from the same random stream within
    /// a step, so score differences between pairs reflect their poses.
    pub shared_cpf_streams: bool,
    /// Build the action's contact cloud from the refined pairs at the end of
    /// the action instead of the incoming pairs at its first step.
    pub cloud_from_final: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            n_opp: 50,
            n_os: 8,
            n_top: 10,
            eps_pp: 10.0,
            sigma: [0.01, 0.01, 5f64.to_radians()],
            gamma_a: 0.8,
            rho_decay: 0.7,
            rho_floor: 0.3,
            dropout_boost: 3.0,
            delta_c: 2.0,
            init_range: [0.03, 0.03, 30f64.to_radians()],
            beta: 5.0,
            penetration_margin: DEFAULT_PENETRATION_MARGIN,
            weights: LossWeights::default(),
            cpf: CpfParams::default(),
            shared_cpf_streams: true,
            cloud_from_final: false,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), ScopeError> {
        let bad = |m: &str| Err(ScopeError::InvalidConfig(m.to_string()));
        if self.n_top == 0 || self.n_opp < self.n_top {
            return bad("need n_opp >= n_top >= 1");
        }
        if self.n_os == 0 {
            return bad("n_os must be positive");
        }
        if !(self.gamma_a > 0.0 && self.gamma_a <= 1.0) {
            return bad("gamma_a must lie in (0, 1]");
        }
        if !(self.delta_c > 1.0) {
            return bad("delta_c must exceed 1");
        }
        if self.sigma.iter().chain(&self.init_range).any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("noise scales and init ranges must be finite and non-negative");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        self.weights.validate().map_err(ScopeError::InvalidConfig)
    }

    /// Noise standard deviations at step `step` of action `action`.
    pub fn noise_scales(&self, step: usize, action: usize, boosted: bool) -> [f64; 3] {
        let rho = self.rho_decay.powi(action as i32 + 1).max(self.rho_floor);
        let boost = if boosted { self.dropout_boost } else { 1.0 };
        let k = self.gamma_a.powi(step as i32) * rho * boost;
        self.sigma.map(|s| s * k)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScopeError {
    #[error("invalid filter configuration: {0}")]
    InvalidConfig(String),
    #[error("observation for the {arm} arm is expressed in {found:?}")]
    FrameMismatch { arm: &'static str, found: Frame },
    #[error(transparent)]
    Cpf(#[from] CpfError),
}

/// Everything one action contributes: measured wrenches and where the two
/// end-effectors were.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub action: usize,
    pub gamma_t: Wrench,
    pub gamma_p: Wrench,
    pub world_from_tool_ee: Isometry3<f64>,
    pub world_from_probe_ee: Isometry3<f64>,
}

impl Observation {
    pub fn check_frames(&self) -> Result<(), ScopeError> {
        if self.gamma_t.frame != Frame::ToolEe {
            return Err(ScopeError::FrameMismatch {
                arm: "tool",
                found: self.gamma_t.frame,
            });
        }
        if self.gamma_p.frame != Frame::ProbeEe {
            return Err(ScopeError::FrameMismatch {
                arm: "probe",
                found: self.gamma_p.frame,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PairScore {
    pub belief_t: ContactBelief,
    pub belief_p: ContactBelief,
    pub n_pp: usize,
    pub eps_t: f64,
    pub eps_p: f64,
    pub terms: LossTerms,
    pub s_c: f64,
    pub s_opp: f64,
}

/// A tool pose hypothesis paired with a probe pose hypothesis.
#[derive(Debug, Clone)]
pub struct OppPair {
    pub pose_t: Pose2,
    pub pose_p: Pose2,
    pub score: Option<Arc<PairScore>>,
}

impl OppPair {
    pub fn new(pose_t: Pose2, pose_p: Pose2) -> Self {
        Self {
            pose_t,
            pose_p,
            score: None,
        }
    }

    pub fn s_opp(&self) -> f64 {
        self.score.as_ref().map_or(f64::INFINITY, |s| s.s_opp)
    }

    pub fn s_c(&self) -> f64 {
        self.score.as_ref().map_or(f64::INFINITY, |s| s.s_c)
    }

    /// Copy with the score dropped, as carried into a new step.
    pub fn unscored(&self) -> Self {
        Self::new(self.pose_t, self.pose_p)
    }
}

/// Shared, read-only inputs of the filter.
#[derive(Debug, Clone, Copy)]
pub struct ScopeContext<'a> {
    pub tool: &'a ObjectModel,
    pub probe: &'a ObjectModel,
    pub cfg: &'a FilterConfig,
    pub sensor: &'a SensorNoise,
    pub exec: Exec,
    pub seed: u64,
    pub record_trace: bool,
}

/// Uniform initial population over the configured box. With `include_truth`,
/// slot 0 holds the zero pose pair.
pub fn init_pairs<R: Rng>(cfg: &FilterConfig, include_truth: bool, rng: &mut R) -> Vec<OppPair> {
    let [rx, rz, rt] = cfg.init_range;
    let draw = |rng: &mut R| {
        let u = |rng: &mut R, r: f64| if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
        Pose2::new(u(rng, rx), u(rng, rz), u(rng, rt))
    };
    let mut out: Vec<OppPair> = (0..cfg.n_opp)
        .map(|_| {
            let t = draw(rng);
            let p = draw(rng);
            OppPair::new(t, p)
        })
        .collect();
    if include_truth {
        out[0] = OppPair::new(Pose2::identity(), Pose2::identity());
    }
    out
}

struct Evaluation {
    belief_t: ContactBelief,
    belief_p: ContactBelief,
    n_pp: usize,
    eps_t: f64,
    eps_p: f64,
    contact: f64,
    force: f64,
}

const ARM_TOOL: u64 = 0;
const ARM_PROBE: u64 = 1;
const NOISE_STREAM: u64 = 0x6e6f_6973;
const RESAMPLE_STREAM: u64 = 0x7265_736d;

fn evaluate(ctx: &ScopeContext, obs: &Observation, step: usize, idx: usize, pair: &OppPair) -> Result<Evaluation, CpfError> {
    let stream = if ctx.cfg.shared_cpf_streams { 0 } else { idx as u64 };
    let key = |arm| [ctx.seed, obs.action as u64, step as u64, stream, arm];
    let cpf: &CpfParams = &ctx.cfg.cpf;
    let belief_t = cpfgrasp_run(ctx.tool, &pair.pose_t, &obs.gamma_t, ctx.sensor, cpf, &mut stream_rng(&key(ARM_TOOL)))?;
    let belief_p = cpfgrasp_run(ctx.probe, &pair.pose_p, &obs.gamma_p, ctx.sensor, cpf, &mut stream_rng(&key(ARM_PROBE)))?;
    let world_t = obs.world_from_tool_ee * pair.pose_t.to_isometry();
    let world_p = obs.world_from_probe_ee * pair.pose_p.to_isometry();
    let n_pp = penetration_count(
        &ctx.tool.samples,
        &ctx.tool.solid,
        &world_t,
        &ctx.probe.samples,
        &ctx.probe.solid,
        &world_p,
        ctx.cfg.penetration_margin,
    );
    let sup_t = world_support(&belief_t, &obs.world_from_tool_ee);
    let sup_p = world_support(&belief_p, &obs.world_from_probe_ee);
    let norm = cpf.norm;
    Ok(Evaluation {
        eps_t: belief_t.wrench_error(&obs.gamma_t, norm),
        eps_p: belief_p.wrench_error(&obs.gamma_p, norm),
        contact: loss_contact(&sup_t, &sup_p),
        force: loss_force_align(&sup_t, &sup_p),
        belief_t,
        belief_p,
        n_pp,
    })
}

/// Per-arm running minimum of the wrench error within one action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrenchMinima {
    pub tool: f64,
    pub probe: f64,
}

impl Default for WrenchMinima {
    fn default() -> Self {
        Self {
            tool: f64::INFINITY,
            probe: f64::INFINITY,
        }
    }
}

/// Importance resampling by softmin of `S_OPP`. The lowest-cost pair always
/// survives and is placed first.
pub fn importance_resample<R: Rng>(pairs: &[OppPair], n: usize, beta: f64, rng: &mut R) -> Vec<OppPair> {
    let costs: Vec<f64> = pairs.iter().map(OppPair::s_opp).collect();
    let weights = softmin(&costs, beta).unwrap_or_else(|| {
        log::warn!("degenerate resampling weights; resampling uniformly");
        vec![1.0; pairs.len()]
    });
    let mut out: Vec<OppPair> = systematic(&weights, n, rng).into_iter().map(|i| pairs[i].clone()).collect();
    if let Some(best) = argmin(&costs) {
        if n > 0 {
            out[0] = pairs[best].clone();
        }
    }
    out
}

fn argmin(costs: &[f64]) -> Option<usize> {
    costs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

/// Gaussian pose perturbation of every pair except the first (the elite).
pub fn noise_model<R: Rng>(pairs: &mut [OppPair], scales: [f64; 3], rng: &mut R) {
    let normals = scales.map(|s| Normal::new(0.0, s).expect("finite scale"));
    let jitter = |p: &Pose2, rng: &mut R| {
        Pose2::new(
            p.x + normals[0].sample(rng),
            p.z + normals[1].sample(rng),
            p.theta + normals[2].sample(rng),
        )
    };
    for pair in pairs.iter_mut().skip(1) {
        let t = jitter(&pair.pose_t, rng);
        let p = jitter(&pair.pose_p, rng);
        *pair = OppPair::new(t, p);
    }
}

/// The `n_top` lowest-cost pairs of `prev` and `curr` together. Ties keep the
/// current pair first.
pub fn select_top(prev: &[OppPair], curr: &[OppPair], n_top: usize) -> Vec<OppPair> {
    let mut all: Vec<&OppPair> = curr.iter().chain(prev).collect();
    all.sort_by(|a, b| a.s_opp().total_cmp(&b.s_opp()));
    all.into_iter().take(n_top).cloned().collect()
}

/// Divergence prevention: keeps the best `n_top` of the previous and current
/// steps, then pads to `n_opp` by importance resampling among them.
pub fn prevent_divergence<R: Rng>(
    prev: &[OppPair],
    curr: &[OppPair],
    n_top: usize,
    n_opp: usize,
    beta: f64,
    rng: &mut R,
) -> (Vec<OppPair>, Vec<OppPair>) {
    let top = select_top(prev, curr, n_top);
    let mut population = top.clone();
    if n_opp > top.len() && !top.is_empty() {
        population.extend(importance_resample(&top, n_opp - top.len(), beta, rng));
    }
    (top, population)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub action: usize,
    pub step: usize,
    pub pair: usize,
    pub terms: LossTerms,
    pub s_c: f64,
    pub s_opp: f64,
    pub pose_t: Pose2,
    pub pose_p: Pose2,
}

#[derive(Debug, Clone)]
pub struct ActionOutcome {
    /// Population carried into the next action (best first).
    pub pairs: Vec<OppPair>,
    /// Best `n_top` pairs after the final step.
    pub top: Vec<OppPair>,
    pub dropout: bool,
    pub mean_sc_final: f64,
    /// Lowest `S_OPP` held after each step.
    pub best_per_step: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

impl ActionOutcome {
    pub fn best(&self) -> &OppPair {
        &self.top[0]
    }
}

fn mean_sc(pairs: &[OppPair]) -> f64 {
    pairs.iter().map(OppPair::s_c).sum::<f64>() / pairs.len() as f64
}

fn score_batch(
    ctx: &ScopeContext,
    obs: &Observation,
    step: usize,
    pairs: &[OppPair],
    minima: &mut WrenchMinima,
) -> Result<Vec<(OppPair, LossTerms, f64)>, ScopeError> {
    let evals = map_slice(ctx.exec, pairs, |i, pair| evaluate(ctx, obs, step, i, pair));
    let evals: Vec<Evaluation> = evals.into_iter().collect::<Result<_, _>>()?;
    for e in &evals {
        minima.tool = minima.tool.min(e.eps_t);
        minima.probe = minima.probe.min(e.eps_p);
    }
    let w = &ctx.cfg.weights;
    Ok(pairs
        .iter()
        .zip(evals)
        .map(|(pair, e)| {
            let terms = LossTerms {
                penetration: loss_penetration(e.n_pp, ctx.cfg.eps_pp),
                contact: e.contact,
                force: e.force,
                wrench: loss_wrench(e.eps_t, e.eps_p, minima.tool, minima.probe),
                memory: 0.0,
            };
            let s_c = score_consistency(&terms, w);
            let score = PairScore {
                belief_t: e.belief_t,
                belief_p: e.belief_p,
                n_pp: e.n_pp,
                eps_t: e.eps_t,
                eps_p: e.eps_p,
                terms,
                s_c,
                s_opp: s_c,
            };
            (
                OppPair {
                    pose_t: pair.pose_t,
                    pose_p: pair.pose_p,
                    score: Some(Arc::new(score)),
                },
                terms,
                s_c,
            )
        })
        .collect())
}

fn attach_memory(ctx: &ScopeContext, memory: &MemoryState, batch: Vec<(OppPair, LossTerms, f64)>) -> Vec<OppPair> {
    let use_memory = ctx.cfg.weights.eta_m > 0.0 && memory.has_active_entries();
    let w = ctx.cfg.weights;
    let lm = map_slice(ctx.exec, &batch, |_, (pair, _, _)| {
        if use_memory {
            loss_memory(&pair.pose_t, &pair.pose_p, memory, &ctx.tool.solid, &ctx.probe.solid)
        } else {
            0.0
        }
    });
    batch
        .into_iter()
        .zip(lm)
        .map(|((mut pair, mut terms, s_c), lm)| {
            terms.memory = lm;
            let mut score = Arc::try_unwrap(pair.score.take().expect("scored")).unwrap_or_else(|a| (*a).clone());
            score.terms = terms;
            score.s_opp = score_opp(s_c, lm, &w);
            pair.score = Some(Arc::new(score));
            pair
        })
        .collect()
}

/// Scores a population against one observation: contact beliefs, losses,
/// the running wrench minima (updated after the batch) and memory.
pub fn score_population(
    ctx: &ScopeContext,
    obs: &Observation,
    step: usize,
    pairs: &[OppPair],
    minima: &mut WrenchMinima,
    memory: &MemoryState,
) -> Result<Vec<OppPair>, ScopeError> {
    obs.check_frames()?;
    let batch = score_batch(ctx, obs, step, pairs, minima)?;
    Ok(attach_memory(ctx, memory, batch))
}

/// Runs all SCOPE steps for one action on a population carried over from
/// the previous action, updating memory at step 0.
pub fn scope_action(
    ctx: &ScopeContext,
    obs: &Observation,
    pairs: &[OppPair],
    memory: &mut MemoryState,
) -> Result<ActionOutcome, ScopeError> {
    ctx.cfg.validate()?;
    obs.check_frames()?;
    let cfg = ctx.cfg;
    let n_a = obs.action;
    let mut minima = WrenchMinima::default();
    let mut population: Vec<OppPair> = pairs.iter().map(OppPair::unscored).collect();
    let mut prev_top: Vec<OppPair> = Vec::new();
    let mut boosted = false;
    let mut dropout = false;
    let mut best_per_step = Vec::with_capacity(cfg.n_os);
    let mut trace = Vec::new();
    let mut rng = stream_rng(&[ctx.seed, n_a as u64, RESAMPLE_STREAM]);
    let mut noise_rng = stream_rng(&[ctx.seed, n_a as u64, NOISE_STREAM]);

    for step in 0..cfg.n_os {
        let batch = score_batch(ctx, obs, step, &population, &mut minima)?;
        if step == 0 {
            let mut order: Vec<usize> = (0..batch.len()).collect();
            order.sort_by(|&a, &b| batch[a].2.total_cmp(&batch[b].2));
            order.truncate(cfg.n_top);
            let sources: Vec<CloudSource> = order
                .iter()
                .map(|&i| {
                    let (pair, _, s_c) = &batch[i];
                    let sc = pair.score.as_ref().expect("scored");
                    CloudSource {
                        pose_t: pair.pose_t,
                        pose_p: pair.pose_p,
                        contact_t: sc.belief_t.mean_contact(),
                        contact_p: sc.belief_p.mean_contact(),
                        s_c: *s_c,
                    }
                })
                .collect();
            let mean_sc0 = sources.iter().map(|s| s.s_c).sum::<f64>() / sources.len() as f64;
            if cfg.weights.eta_m > 0.0 {
                if !cfg.cloud_from_final {
                    update_contact_cloud(memory, n_a, &sources, cfg.beta);
                }
                if check_dropout(memory, n_a, mean_sc0, cfg.delta_c) {
                    log::debug!("action {n_a}: memory dropout of action {}", n_a - 1);
                    dropout = true;
                    boosted = true;
                }
            }
        }
        let scored = attach_memory(ctx, memory, batch);
        if ctx.record_trace {
            trace.extend(scored.iter().enumerate().map(|(i, p)| {
                let s = p.score.as_ref().expect("scored");
                TraceRow {
                    action: n_a,
                    step,
                    pair: i,
                    terms: s.terms,
                    s_c: s.s_c,
                    s_opp: s.s_opp,
                    pose_t: p.pose_t,
                    pose_p: p.pose_p,
                }
            }));
        }
        let (top, next) = prevent_divergence(&prev_top, &scored, cfg.n_top, cfg.n_opp, cfg.beta, &mut rng);
        best_per_step.push(top[0].s_opp());
        prev_top = top;
        population = next;
        if step + 1 < cfg.n_os {
            noise_model(&mut population, cfg.noise_scales(step, n_a, boosted), &mut noise_rng);
        }
    }
    let mean_sc_final = mean_sc(&prev_top);
    if cfg.weights.eta_m > 0.0 && cfg.cloud_from_final {
        let sources: Vec<CloudSource> = prev_top
            .iter()
            .map(|pair| {
                let sc = pair.score.as_ref().expect("scored");
                CloudSource {
                    pose_t: pair.pose_t,
                    pose_p: pair.pose_p,
                    contact_t: sc.belief_t.mean_contact(),
                    contact_p: sc.belief_p.mean_contact(),
                    s_c: sc.s_c,
                }
            })
            .collect();
        update_contact_cloud(memory, n_a, &sources, cfg.beta);
    }
    memory.prev_mean_sc = Some(mean_sc_final);
    Ok(ActionOutcome {
        pairs: population,
        top: prev_top,
        dropout,
        mean_sc_final,
        best_per_step,
        trace,
    })
}
