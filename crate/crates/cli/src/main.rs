use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use multiscope_cli::{cmd_ablate, cmd_export_assets, cmd_noise_sweep, cmd_run, cmd_segment, AblationMode, CliError, Flags};

#[derive(Parser)]
#[command(name = "multiscope", version, about = "Bimanual in-hand pose estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for trial-level parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write per-step scores and the contact clouds.
    #[arg(long)]
    trace: bool,
    /// Seed the pose population with the true poses.
    #[arg(long)]
    include_gt: bool,
}

impl Common {
    fn flags(&self) -> Flags {
        Flags {
            jobs: self.jobs,
            trace: self.trace,
            include_gt: self.include_gt,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Loss,
    Action,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline over every seed.
    Run(Common),
    /// Loss-subset or single-action ablation table.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Repeat the run at several wrench noise levels.
    NoiseSweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated fractions, e.g. 0,0.05,0.08.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
    /// Face-labelled point clouds of the tool and the probe.
    Segment(Common),
    /// Write the procedural meshes as OFF files.
    ExportAssets {
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(c) => {
            let s = cmd_run(&c.config, &c.out, c.flags())?;
            println!(
                "tool {:.3} ± {:.3} cm, {:+.2} ± {:.2} deg; task success {:.0}%",
                s.tool.trans_err_cm.mean,
                s.tool.trans_err_cm.std,
                s.tool.rot_err_deg.mean,
                s.tool.rot_err_deg.std,
                s.task_success_rate * 100.0
            );
        }
        Command::Ablate { common: c, mode } => {
            let mode = mode.map(|m| match m {
                Mode::Loss => AblationMode::Loss,
                Mode::Action => AblationMode::Action,
            });
            for r in cmd_ablate(&c.config, &c.out, c.flags(), mode)? {
                println!("{:<22} {:.3} cm {:>5.0}%", r.label, r.tool_trans_mean_cm, r.task_success_pct);
            }
        }
        Command::NoiseSweep { common: c, levels } => {
            for l in cmd_noise_sweep(&c.config, &c.out, c.flags(), levels)? {
                println!(
                    "noise {:<5} {:.3} cm {:>5.0}%",
                    l.level,
                    l.summary.tool.trans_err_cm.mean,
                    l.summary.task_success_rate * 100.0
                );
            }
        }
        Command::Segment(c) => {
            for s in cmd_segment(&c.config, &c.out, c.flags())? {
                println!("{}: {} samples, {} faces, {} noise", s.object, s.samples, s.faces, s.noise);
            }
        }
        Command::ExportAssets { out } => {
            for p in cmd_export_assets(&out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
