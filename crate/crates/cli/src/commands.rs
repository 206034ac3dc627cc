//! The subcommands. Each loads its config, runs trials across seeds on a
//! worker pool and writes tables named after the run's manifest hash.

use std::path::{Path, PathBuf};

use log::info;
use multiscope::geometry::{parse_off, write_off, GeometryError};
use multiscope::memory::cloud_rows;
use multiscope::sim::{make_tool_mesh, run_trial, Scenario, SimError, Tool, TrialResult};
use multiscope::{Exec, LossWeights, ObjectModel, TriMesh};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{AblationMode, ConfigError, RunConfig};
use crate::report::{action_rows, summarize, write_csv, write_json, Summary, TableRow, SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("asset {path}: {source}")]
    Asset { path: PathBuf, source: GeometryError },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Asset { .. } => 3,
            _ => 1,
        }
    }
}

/// Flags shared by every experiment command.
#[derive(Debug, Clone, Copy, Default)]
pub struct Flags {
    pub jobs: Option<usize>,
    pub trace: bool,
    pub include_gt: bool,
}

#[derive(Debug, Clone, Serialize)]
struct ManifestBody<'a, E: Serialize> {
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    include_gt: bool,
    trace: bool,
    extra: E,
    assets: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub hash: String,
    pub command: String,
    pub tool: Tool,
    pub seeds: Vec<u64>,
    pub version: &'static str,
    pub output_dir: PathBuf,
    pub config: RunConfig,
}

/// Everything a command needs: the parsed config, the built scenario and the
/// manifest that names its outputs.
pub struct Session {
    pub cfg: RunConfig,
    pub scenario: Scenario,
    pub manifest: RunManifest,
    pub flags: Flags,
    pub out: PathBuf,
}

fn load_asset(base: &Path, rel: &Path) -> Result<(TriMesh, String), CliError> {
    let path = base.join(rel);
    let bytes = std::fs::read(&path).map_err(|source| CliError::Asset {
        path: path.clone(),
        source: GeometryError::Io {
            path: path.display().to_string(),
            source,
        },
    })?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let mesh = std::str::from_utf8(&bytes)
        .map_err(|e| GeometryError::Parse {
            line: 0,
            message: e.to_string(),
        })
        .and_then(parse_off)
        .map_err(|source| CliError::Asset { path, source })?;
    Ok((mesh, digest))
}

impl Session {
    pub fn open<E: Serialize>(command: &str, config: &Path, out: &Path, flags: Flags, extra: E) -> Result<Self, CliError> {
        let cfg = RunConfig::load(config)?;
        let base = config.parent().unwrap_or(Path::new("."));
        let mut digests = Vec::new();
        let mut mesh_for = |rel: &Option<PathBuf>, tool: Tool| -> Result<TriMesh, CliError> {
            match rel {
                Some(rel) => {
                    let (mesh, digest) = load_asset(base, rel)?;
                    digests.push((tool.name().to_string(), digest));
                    Ok(mesh)
                }
                None => Ok(make_tool_mesh(tool).map_err(SimError::from)?),
            }
        };
        let tool_mesh = mesh_for(&cfg.assets.tool, cfg.tool)?;
        let probe_mesh = mesh_for(&cfg.assets.probe, Tool::Probe)?;
        let mut scenario = Scenario::from_meshes(
            cfg.tool,
            tool_mesh,
            probe_mesh,
            &cfg.sampling.tool,
            &cfg.sampling.probe,
            &cfg.actions,
            cfg.force,
            cfg.action_seed,
        )?;
        scenario.task = cfg.task.spec();

        let body = ManifestBody {
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: &cfg,
            include_gt: flags.include_gt,
            trace: flags.trace,
            extra,
            assets: digests,
        };
        let canonical = serde_json::to_vec(&body).expect("manifest serialises");
        let hash = hex::encode(&Sha256::digest(&canonical)[..8]);
        let manifest = RunManifest {
            hash,
            command: command.to_string(),
            tool: cfg.tool,
            seeds: cfg.seeds(),
            version: env!("CARGO_PKG_VERSION"),
            output_dir: out.to_path_buf(),
            config: cfg.clone(),
        };
        std::fs::create_dir_all(out)?;
        write_json(&out.join("manifest.json"), &manifest)?;
        info!("{command}: manifest {}", manifest.hash);
        Ok(Self {
            cfg,
            scenario,
            manifest,
            flags,
            out: out.to_path_buf(),
        })
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.flags.jobs {
            b = b.num_threads(n.max(1));
        }
        Ok(b.build()?)
    }

    /// Runs every seed of `cfg` on `scenario`, results in seed order.
    pub fn trials(&self, cfg: &RunConfig, scenario: &Scenario) -> Result<Vec<TrialResult>, CliError> {
        let opts = cfg.trial_options(self.flags.include_gt, self.flags.trace);
        let seeds = cfg.seeds();
        let results: Result<Vec<_>, SimError> = self
            .pool()?
            .install(|| seeds.par_iter().map(|&s| run_trial(scenario, &opts, s, Exec::Parallel)).collect());
        Ok(results?)
    }

    fn csv<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<(), CliError> {
        Ok(write_csv(&self.out.join(name), &self.manifest.hash, rows)?)
    }

    fn json<T: Serialize>(&self, body: T) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Doc<T> {
            schema_version: u32,
            manifest: String,
            command: String,
            tool_name: Tool,
            seeds: Vec<u64>,
            #[serde(flatten)]
            body: T,
        }
        let doc = Doc {
            schema_version: SCHEMA_VERSION,
            manifest: self.manifest.hash.clone(),
            command: self.manifest.command.clone(),
            tool_name: self.cfg.tool,
            seeds: self.cfg.seeds(),
            body,
        };
        Ok(write_json(&self.out.join("summary.json"), &doc)?)
    }

    fn write_trials(&self, suffix: &str, trials: &[TrialResult]) -> Result<(), CliError> {
        self.csv(&format!("actions{suffix}.csv"), &action_rows(trials))?;
        if self.flags.trace {
            self.csv(&format!("trace{suffix}.csv"), &trace_rows(trials))?;
            self.csv(&format!("cloud{suffix}.csv"), &cloud_table(trials))?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct TraceCsv {
    trial: usize,
    action: usize,
    step: usize,
    pair: usize,
    l_p: f64,
    l_c: f64,
    l_f: f64,
    l_gamma: f64,
    l_m: f64,
    s_c: f64,
    s_opp: f64,
    tool_x: f64,
    tool_z: f64,
    tool_theta: f64,
    probe_x: f64,
    probe_z: f64,
    probe_theta: f64,
}

fn trace_rows(trials: &[TrialResult]) -> Vec<TraceCsv> {
    let mut out = Vec::new();
    for (trial, t) in trials.iter().enumerate() {
        out.extend(t.trace.iter().map(|r| TraceCsv {
            trial,
            action: r.action,
            step: r.step,
            pair: r.pair,
            l_p: r.terms.penetration,
            l_c: r.terms.contact,
            l_f: r.terms.force,
            l_gamma: r.terms.wrench,
            l_m: r.terms.memory,
            s_c: r.s_c,
            s_opp: r.s_opp,
            tool_x: r.pose_t.x,
            tool_z: r.pose_t.z,
            tool_theta: r.pose_t.theta,
            probe_x: r.pose_p.x,
            probe_z: r.pose_p.z,
            probe_theta: r.pose_p.theta,
        }));
    }
    out
}

#[derive(Serialize)]
struct CloudCsv {
    trial: usize,
    object: &'static str,
    action: usize,
    x: f64,
    y: f64,
    z: f64,
    weight: f64,
    dropped: bool,
}

fn cloud_table(trials: &[TrialResult]) -> Vec<CloudCsv> {
    let mut out = Vec::new();
    for (trial, t) in trials.iter().enumerate() {
        out.extend(cloud_rows(&t.memory).into_iter().map(|(object, e, dropped)| CloudCsv {
            trial,
            object,
            action: e.action,
            x: e.point_body.x,
            y: e.point_body.y,
            z: e.point_body.z,
            weight: e.weight,
            dropped,
        }));
    }
    out
}

pub fn cmd_run(config: &Path, out: &Path, flags: Flags) -> Result<Summary, CliError> {
    let s = Session::open("run", config, out, flags, ())?;
    let trials = s.trials(&s.cfg, &s.scenario)?;
    s.write_trials("", &trials)?;
    let summary = summarize(&trials);
    s.json(summary)?;
    Ok(summary)
}

/// Loss subsets in table order: single losses, the three-loss base, base
/// plus the wrench loss, base plus memory, and the full method.
pub fn loss_subsets(full: &LossWeights) -> Vec<(&'static str, LossWeights)> {
    let keep = |p: bool, c: bool, f: bool, g: bool, m: bool| LossWeights {
        eta_p: if p { full.eta_p } else { 0.0 },
        eta_c: if c { full.eta_c } else { 0.0 },
        eta_f: if f { full.eta_f } else { 0.0 },
        eta_gamma: if g { full.eta_gamma } else { 0.0 },
        eta_m: if m { full.eta_m } else { 0.0 },
    };
    vec![
        ("L_P", keep(true, false, false, false, false)),
        ("L_C", keep(false, true, false, false, false)),
        ("L_F", keep(false, false, true, false, false)),
        ("L_Gamma", keep(false, false, false, true, false)),
        ("L_M", keep(false, false, false, false, true)),
        ("L_P+L_C+L_F", keep(true, true, true, false, false)),
        ("L_P+L_C+L_F+L_Gamma", keep(true, true, true, true, false)),
        ("L_P+L_C+L_F+L_M", keep(true, true, true, false, true)),
        ("full", *full),
    ]
}

fn slug(label: &str) -> String {
    label.to_ascii_lowercase().replace('+', "_")
}

pub fn cmd_ablate(config: &Path, out: &Path, flags: Flags, mode: Option<AblationMode>) -> Result<Vec<TableRow>, CliError> {
    let mode = match mode {
        Some(m) => m,
        None => RunConfig::load(config)?.ablate.mode,
    };
    let s = Session::open("ablate", config, out, flags, mode)?;
    let mut rows = Vec::new();
    match mode {
        AblationMode::Loss => {
            for (label, weights) in loss_subsets(&s.cfg.filter.weights) {
                let mut cfg = s.cfg.clone();
                cfg.filter.weights = weights;
                let trials = s.trials(&cfg, &s.scenario)?;
                s.write_trials(&format!("_{}", slug(label)), &trials)?;
                rows.push(TableRow::new(label, &summarize(&trials)));
            }
        }
        AblationMode::Action => {
            let n = s.scenario.actions.len();
            for i in 0..n {
                let trials = s.trials(&s.cfg, &s.scenario.with_actions(&[i]))?;
                s.write_trials(&format!("_action_{}", i + 1), &trials)?;
                rows.push(TableRow::new(format!("action_{}", i + 1), &summarize(&trials)));
            }
            rows.push(TableRow::mean_of("mean", &rows));
            let trials = s.trials(&s.cfg, &s.scenario)?;
            s.write_trials("_full", &trials)?;
            rows.push(TableRow::new("full", &summarize(&trials)));
        }
    }
    let name = match mode {
        AblationMode::Loss => "ablation_loss.csv",
        AblationMode::Action => "ablation_action.csv",
    };
    s.csv(name, &rows)?;
    #[derive(Serialize)]
    struct Body<'a> {
        mode: AblationMode,
        rows: &'a [TableRow],
    }
    s.json(Body { mode, rows: &rows })?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub level: f64,
    pub summary: Summary,
}

pub fn cmd_noise_sweep(config: &Path, out: &Path, flags: Flags, levels: Option<Vec<f64>>) -> Result<Vec<LevelSummary>, CliError> {
    let levels = match levels {
        Some(l) => l,
        None => RunConfig::load(config)?.noise_sweep.levels,
    };
    if levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(ConfigError::Parse {
            path: config.to_path_buf(),
            message: "noise levels must be non-negative".into(),
        }
        .into());
    }
    let s = Session::open("noise-sweep", config, out, flags, &levels)?;
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for &level in &levels {
        let mut cfg = s.cfg.clone();
        cfg.noise = level;
        let trials = s.trials(&cfg, &s.scenario)?;
        s.write_trials(&format!("_noise_{level}"), &trials)?;
        let summary = summarize(&trials);
        rows.push(TableRow::new(format!("{level}"), &summary));
        summaries.push(LevelSummary { level, summary });
    }
    s.csv("noise_sweep.csv", &rows)?;
    #[derive(Serialize)]
    struct Body<'a> {
        levels: &'a [LevelSummary],
    }
    s.json(Body { levels: &summaries })?;
    Ok(summaries)
}

#[derive(Serialize)]
struct SegmentCsv {
    x: f64,
    y: f64,
    z: f64,
    nx: f64,
    ny: f64,
    nz: f64,
    face_id: i64,
}

fn segment_rows(model: &ObjectModel) -> Vec<SegmentCsv> {
    let s = &model.samples;
    (0..s.len())
        .map(|i| SegmentCsv {
            x: s.points[i].x,
            y: s.points[i].y,
            z: s.points[i].z,
            nx: s.normals[i].x,
            ny: s.normals[i].y,
            nz: s.normals[i].z,
            face_id: model.faces.point_face[i].map_or(-1, |f| f as i64),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentSummary {
    pub object: String,
    pub samples: usize,
    pub faces: usize,
    pub noise: usize,
    pub face_sizes: Vec<usize>,
    pub face_centroids: Vec<[f64; 3]>,
}

/// Face-labelled point clouds of the tool and the probe.
pub fn cmd_segment(config: &Path, out: &Path, flags: Flags) -> Result<Vec<SegmentSummary>, CliError> {
    let s = Session::open("segment", config, out, flags, ())?;
    let mut summaries = Vec::new();
    for model in [&s.scenario.tool_model, &s.scenario.probe_model] {
        let name = if std::ptr::eq(model, &s.scenario.probe_model) { "probe" } else { s.cfg.tool.name() };
        s.csv(&format!("segment_{name}.csv"), &segment_rows(model))?;
        summaries.push(SegmentSummary {
            object: name.to_string(),
            samples: model.samples.len(),
            faces: model.faces.len(),
            noise: model.faces.noise.len(),
            face_sizes: model.faces.faces.iter().map(|f| f.indices.len()).collect(),
            face_centroids: model.faces.faces.iter().map(|f| f.centroid.into()).collect(),
        });
    }
    #[derive(Serialize)]
    struct Body<'a> {
        objects: &'a [SegmentSummary],
    }
    s.json(Body { objects: &summaries })?;
    Ok(summaries)
}

/// Writes the procedural meshes as OFF files.
pub fn cmd_export_assets(out: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for tool in Tool::ALL {
        let mesh = make_tool_mesh(tool).map_err(SimError::from)?;
        let path = out.join(format!("{}.off", tool.name()));
        std::fs::write(&path, write_off(&mesh))?;
        written.push(path);
    }
    Ok(written)
}
