//! Short platform comparison in the small room: every mode with and without
//! the merged estimate, shared seeds, CSV outputs in the given directory.
//!
//! ```text
//! cargo run --release --example comparison_batch -- /tmp/compare
//! ```

use std::path::PathBuf;

use activecam::harness::{load_environment, run_batch, write_batch, ExperimentConfig};

fn main() -> activecam::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("compare"));
    let mut cfg = ExperimentConfig::load(std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/small_room.toml")))?;
    cfg.cells.clear();
    cfg.trials = 2;
    cfg.duration = 60.0;
    let env = load_environment(&cfg)?;
    let report = run_batch(&cfg, &env)?;
    write_batch(&out, &report)?;
    println!("{:>6} {:>4} {:>10} {:>8} {:>8} {:>8}", "cell", "ok", "wheel/m", "ATE", "BAC", "path");
    let show = |v: Option<(f64, f64)>| v.map_or("n/a".to_string(), |(m, _)| format!("{m:.3}"));
    for c in &report.cells {
        println!(
            "{:>6} {:>4} {:>10} {:>8} {:>8} {:>8}",
            c.platform.label(),
            format!("{}/{}", c.successes, c.trials),
            show(c.wheel_rot_per_m),
            show(c.ate),
            show(c.bac),
            show(c.path_len)
        );
    }
    println!("CSV files written to {}", out.display());
    Ok(())
}
