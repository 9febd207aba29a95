//! Runs one closed-loop exploration trial and prints its summary.
//!
//! ```text
//! cargo run --release --example single_trial -- assets/office.toml HH 60
//! ```

use std::path::PathBuf;
use std::time::Instant;

use activecam::harness::{load_environment, run_trial, ExperimentConfig};

fn main() -> activecam::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "assets/small_room.toml".into()));
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(mode) = args.next() {
        let p: activecam::planner::Platform = mode.parse()?;
        cfg.mode = p.mode;
        cfg.merged = p.merged;
    }
    if let Some(d) = args.next() {
        cfg.duration = d.parse().map_err(|_| activecam::Error::Config("duration must be a number".into()))?;
    }
    let env = load_environment(&cfg)?;
    let t0 = Instant::now();
    let rec = run_trial(&cfg, &env, cfg.seed)?;
    let s = &rec.summary;
    println!("{} seed {} -> {} after {:.1} s ({:.2} s wall)", rec.platform, rec.seed, rec.outcome.label(), s.duration, t0.elapsed().as_secs_f64());
    println!("  path {:.2} m, wheel rotation {:?} rad/m", s.path_length, s.wheel_rotation_per_meter);
    println!("  loops {} ({:?} /m), graph nodes {}", s.loops, s.loops_per_meter, rec.graph.len());
    println!("  ATE graph {:?} m, filter {:?} m", s.ate, s.ate_filter);
    println!("  BAC {:.4} (online {:.4}), entropy {:.4}", s.bac, s.bac_online, s.entropy_norm);
    println!("  replans {}, max violation {:.2e}", rec.replans, s.max_violation);
    if let activecam::harness::TrialOutcome::Failed(why) = &rec.outcome {
        println!("  failure: {why}");
    }
    Ok(())
}
