//! Run configuration: a TOML file laid over the built-in defaults. Every key
//! in the file must name an existing setting.

use std::path::{Path, PathBuf};

use multiscope::sim::{ActionStrategy, ObjectSpec, TaskSpec, Tool, TrialOptions, DEFAULT_FORCE};
use multiscope::FilterConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskVariant {
    Tight,
    Loose,
}

impl TaskVariant {
    pub fn spec(self) -> TaskSpec {
        match self {
            TaskVariant::Tight => TaskSpec::tight(),
            TaskVariant::Loose => TaskSpec::loose(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AblationMode {
    Loss,
    Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assets {
    /// OFF files, relative to the config file. Unset means the procedural mesh.
    pub tool: Option<PathBuf>,
    pub probe: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub tool: ObjectSpec,
    pub probe: ObjectSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub force_sigma: f64,
    pub torque_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ablate {
    pub mode: AblationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweep {
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tool: Tool,
    pub trials: u64,
    /// First seed; trial `i` uses `seed + i`.
    pub seed: u64,
    /// Relative wrench noise.
    pub noise: f64,
    pub force: f64,
    pub task: TaskVariant,
    pub action_seed: u64,
    pub actions: ActionStrategy,
    pub assets: Assets,
    pub sampling: Sampling,
    pub sensor: Sensor,
    pub filter: FilterConfig,
    pub ablate: Ablate,
    pub noise_sweep: NoiseSweep,
}

impl Default for RunConfig {
    fn default() -> Self {
        let opts = TrialOptions::default();
        Self {
            tool: Tool::Wrench,
            trials: 10,
            seed: 0,
            noise: 0.0,
            force: DEFAULT_FORCE,
            task: TaskVariant::Tight,
            action_seed: 0,
            actions: ActionStrategy::Curated { pokes: None },
            assets: Assets { tool: None, probe: None },
            sampling: Sampling {
                tool: ObjectSpec::tool_default(),
                probe: ObjectSpec::probe_default(),
            },
            sensor: Sensor {
                force_sigma: opts.sensor_sigma.0,
                torque_sigma: opts.sensor_sigma.1,
            },
            filter: FilterConfig::default(),
            ablate: Ablate { mode: AblationMode::Loss },
            noise_sweep: NoiseSweep {
                levels: vec![0.0, 0.05, 0.08],
            },
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let patch: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        let patch = serde_json::to_value(patch).map_err(|e| e.to_string())?;
        let mut base = serde_json::to_value(RunConfig::default()).map_err(|e| e.to_string())?;
        overlay(&mut base, patch, "")?;
        let cfg: RunConfig = serde_json::from_value(base).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.trials == 0 {
            return Err("trials must be positive".into());
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err("noise must be non-negative".into());
        }
        if !(self.force.is_finite() && self.force > 0.0) {
            return Err("force must be positive".into());
        }
        if self.tool == Tool::Probe {
            return Err("the probe cannot be the estimated tool".into());
        }
        if self.noise_sweep.levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err("noise levels must be non-negative".into());
        }
        if !(self.sensor.force_sigma > 0.0 && self.sensor.torque_sigma > 0.0) {
            return Err("sensor sigmas must be positive".into());
        }
        self.filter.validate().map_err(|e| e.to_string())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.trials).map(|i| self.seed + i).collect()
    }

    pub fn trial_options(&self, include_gt: bool, record_trace: bool) -> TrialOptions {
        TrialOptions {
            filter: self.filter,
            sensor_sigma: (self.sensor.force_sigma, self.sensor.torque_sigma),
            noise_pct: self.noise,
            include_gt,
            record_trace,
        }
    }
}

/// Writes `patch` over `base`. Object keys must already exist in `base`; a
/// single-key object may replace another single-key object, and an object
/// with a different `kind` replaces the old one whole (enum variants).
fn overlay(base: &mut Value, patch: Value, at: &str) -> Result<(), String> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            let variant_swap = b.len() == 1 && p.len() == 1 && !b.contains_key(p.keys().next().unwrap());
            let retagged = matches!((b.get("kind"), p.get("kind")), (Some(x), Some(y)) if x != y);
            if variant_swap || retagged {
                *b = p;
                return Ok(());
            }
            for (k, v) in p {
                let path = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) => overlay(slot, v, &path)?,
                    None => return Err(format!("unknown key `{path}`")),
                }
            }
            Ok(())
        }
        (b, p) => {
            *b = p;
            Ok(())
        }
    }
}
