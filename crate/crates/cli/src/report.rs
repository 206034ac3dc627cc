//! Output tables and summary statistics.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use multiscope::sim::{ActionRecord, TrialResult};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Writes `rows` as CSV below a `# manifest=<hash>` line.
pub fn write_csv<R: Serialize>(path: &Path, manifest: &str, rows: &[R]) -> std::io::Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# manifest={manifest}")?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row).map_err(std::io::Error::other)?;
    }
    w.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionRow {
    pub trial: usize,
    pub seed: u64,
    pub action_index: usize,
    pub object: &'static str,
    pub x_err: f64,
    pub z_err: f64,
    pub theta_err: f64,
    pub trans_err_cm: f64,
    pub rot_err_deg: f64,
    pub task_success: bool,
    pub dropout: bool,
}

/// One tool row and one probe row per action. Errors are in centimetres and
/// degrees; probe rows carry no task outcome.
pub fn action_rows(trials: &[TrialResult]) -> Vec<ActionRow> {
    let mut rows = Vec::new();
    for (trial, r) in trials.iter().enumerate() {
        for a in &r.actions {
            for (object, e) in [("tool", a.error_t), ("probe", a.error_p)] {
                rows.push(ActionRow {
                    trial,
                    seed: r.seed,
                    action_index: a.action,
                    object,
                    x_err: e.dx * 100.0,
                    z_err: e.dz * 100.0,
                    theta_err: e.dtheta.to_degrees(),
                    trans_err_cm: e.translation * 100.0,
                    rot_err_deg: e.dtheta.to_degrees(),
                    task_success: object == "tool" && a.task_success,
                    dropout: a.dropout,
                });
            }
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> MeanStd {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectStats {
    pub trans_err_cm: MeanStd,
    pub rot_err_deg: MeanStd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub tool: ObjectStats,
    pub probe: ObjectStats,
    pub task_success_rate: f64,
}

/// Statistics over the final action of each trial.
pub fn summarize(trials: &[TrialResult]) -> Summary {
    let finals: Vec<&ActionRecord> = trials.iter().map(|t| t.final_record()).collect();
    let stats = |pick: fn(&ActionRecord) -> multiscope::sim::PoseError| {
        let trans: Vec<f64> = finals.iter().map(|a| pick(a).translation * 100.0).collect();
        let rot: Vec<f64> = finals.iter().map(|a| pick(a).dtheta.to_degrees()).collect();
        ObjectStats {
            trans_err_cm: mean_std(&trans),
            rot_err_deg: mean_std(&rot),
        }
    };
    let successes = finals.iter().filter(|a| a.task_success).count();
    Summary {
        trials: finals.len(),
        tool: stats(|a| a.error_t),
        probe: stats(|a| a.error_p),
        task_success_rate: successes as f64 / finals.len() as f64,
    }
}

/// A row of an ablation or sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub label: String,
    pub tool_trans_mean_cm: f64,
    pub tool_trans_std_cm: f64,
    pub tool_rot_mean_deg: f64,
    pub tool_rot_std_deg: f64,
    pub probe_trans_mean_cm: f64,
    pub probe_trans_std_cm: f64,
    pub probe_rot_mean_deg: f64,
    pub probe_rot_std_deg: f64,
    pub task_success_pct: f64,
}

impl TableRow {
    pub fn new(label: impl Into<String>, s: &Summary) -> Self {
        Self {
            label: label.into(),
            tool_trans_mean_cm: s.tool.trans_err_cm.mean,
            tool_trans_std_cm: s.tool.trans_err_cm.std,
            tool_rot_mean_deg: s.tool.rot_err_deg.mean,
            tool_rot_std_deg: s.tool.rot_err_deg.std,
            probe_trans_mean_cm: s.probe.trans_err_cm.mean,
            probe_trans_std_cm: s.probe.trans_err_cm.std,
            probe_rot_mean_deg: s.probe.rot_err_deg.mean,
            probe_rot_std_deg: s.probe.rot_err_deg.std,
            task_success_pct: s.task_success_rate * 100.0,
        }
    }

    /// Column-wise mean of several rows.
    pub fn mean_of(label: impl Into<String>, rows: &[TableRow]) -> Self {
        let n = rows.len() as f64;
        let avg = |f: fn(&TableRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Self {
            label: label.into(),
            tool_trans_mean_cm: avg(|r| r.tool_trans_mean_cm),
            tool_trans_std_cm: avg(|r| r.tool_trans_std_cm),
            tool_rot_mean_deg: avg(|r| r.tool_rot_mean_deg),
            tool_rot_std_deg: avg(|r| r.tool_rot_std_deg),
            probe_trans_mean_cm: avg(|r| r.probe_trans_mean_cm),
            probe_trans_std_cm: avg(|r| r.probe_trans_std_cm),
            probe_rot_mean_deg: avg(|r| r.probe_rot_mean_deg),
            probe_rot_std_deg: avg(|r| r.probe_rot_std_deg),
            task_success_pct: avg(|r| r.task_success_pct),
        }
    }
}
