use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use activecam::harness::{
    load_environment, run_batch, run_trial, write_batch, write_snapshots, write_trial, ExperimentConfig, TrialOutcome,
};
use activecam::metrics::ground_truth_classes;
use activecam::planner::PlatformMode;
use activecam::{Error, Result};

/// Active V-SLAM simulation with an independently rotating camera.
#[derive(Parser)]
#[command(name = "activecam", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a single trial and write its series, maps and pose graph.
    Run(Common),
    /// Run every configured cell over the seed list and write the summary.
    Batch(Common),
    /// Run a single trial and write map snapshots as PGM.
    MapExport {
        #[command(flatten)]
        common: Common,
        /// Snapshot period, seconds.
        #[arg(long, default_value_t = 30.0)]
        every: f64,
    },
    /// Check that an environment loads and the start pose is free.
    ValidateEnv(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<PathBuf>,
    /// A, HH, OC or Y0.
    #[arg(long)]
    mode: Option<PlatformMode>,
    #[arg(long)]
    merged: Option<bool>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Seconds per trial.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Concurrent trials for `batch`.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.env {
            cfg.env = v.clone();
        }
        if let Some(v) = self.mode {
            cfg.mode = v;
        }
        if let Some(v) = self.merged {
            cfg.merged = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.duration {
            cfg.duration = v;
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn trial_status(outcome: &TrialOutcome) -> Result<()> {
    match outcome {
        TrialOutcome::Failed(why) => Err(Error::TrialFailed(why.clone())),
        _ => Ok(()),
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Run(c) => {
            let cfg = c.config()?;
            let env = load_environment(&cfg)?;
            let rec = run_trial(&cfg, &env, cfg.seed)?;
            write_trial(&cfg.out_dir, &rec, cfg.duration)?;
            let s = &rec.summary;
            println!(
                "{} seed {}: {} at {:.1} s, path {:.2} m, BAC {:.4}, ATE {}",
                rec.platform,
                rec.seed,
                rec.outcome.label(),
                s.duration,
                s.path_length,
                s.bac,
                s.ate.map_or("n/a".into(), |a| format!("{a:.4} m"))
            );
            trial_status(&rec.outcome)
        }
        Cmd::Batch(c) => {
            let cfg = c.config()?;
            let env = load_environment(&cfg)?;
            let report = run_batch(&cfg, &env)?;
            write_batch(&cfg.out_dir, &report)?;
            for cell in &report.cells {
                println!(
                    "{:6} {}/{} ok  wheel {:>8}  ATE {:>8}  BAC {:>8}",
                    cell.platform.label(),
                    cell.successes,
                    cell.trials,
                    cell.wheel_rot_per_m.map_or("n/a".into(), |v| format!("{:.3}", v.0)),
                    cell.ate.map_or("n/a".into(), |v| format!("{:.4}", v.0)),
                    cell.bac.map_or("n/a".into(), |v| format!("{:.4}", v.0)),
                );
            }
            match report.failures() {
                0 => Ok(()),
                n => Err(Error::TrialFailed(format!("{n} trial(s) failed"))),
            }
        }
        Cmd::MapExport { common, every } => {
            let mut cfg = common.config()?;
            if !(every > 0.0) {
                return Err(Error::Config("--every must be positive".into()));
            }
            cfg.sim.snapshot_every = every;
            let env = load_environment(&cfg)?;
            let rec = run_trial(&cfg, &env, cfg.seed)?;
            let files = write_snapshots(&cfg.out_dir, &rec)?;
            write_trial(&cfg.out_dir, &rec, cfg.duration)?;
            println!("wrote {} snapshots to {}", files.len(), cfg.out_dir.display());
            trial_status(&rec.outcome)
        }
        Cmd::ValidateEnv(c) => {
            let cfg = c.config()?;
            let env = load_environment(&cfg)?;
            let g = env.geometry;
            let start = cfg.start_pose();
            let reachable = ground_truth_classes(&env, [start.x, start.y])
                .iter()
                .filter(|c| **c == activecam::slamlite::CellClass::Free)
                .count();
            println!(
                "{}: {}x{} cells at {} m, {} free, {} occupied, {} free cells reachable from the start",
                display(&cfg.env),
                g.width,
                g.height,
                g.resolution,
                env.free_count(),
                env.occupied_count(),
                reachable
            );
            Ok(())
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
