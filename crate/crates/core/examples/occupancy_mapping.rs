//! Log-odds mapping from a full camera sweep at the start pose of the small
//! room, scored against the ground-truth class map and written as PGM.
//!
//! ```text
//! cargo run --example occupancy_mapping -- /tmp/sweep.pgm
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use activecam::harness::{load_environment, ExperimentConfig};
use activecam::metrics::{balanced_accuracy, ground_truth_classes};
use activecam::slamlite::OccupancyGrid;
use activecam::worldsim::camera_observation;

fn main() -> activecam::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("sweep.pgm"));
    let cfg = ExperimentConfig::load(std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/small_room.toml")))?;
    let env = load_environment(&cfg)?;
    let geom = env.geometry;
    let cam = cfg.sensors.camera();
    let start = cfg.start_pose();
    let gt = ground_truth_classes(&env, [start.x, start.y]);

    let mut grid = OccupancyGrid::new(geom, cfg.slam.log_odds);
    println!("{:>8} {:>7} {:>9} {:>8} {:>9} {:>7}", "heading", "free", "occupied", "unknown", "entropy", "BAC");
    for k in 0..12 {
        let psi = k as f64 * std::f64::consts::PI / 6.0;
        let obs = camera_observation(&env, &start, psi, &cam)?;
        grid.update_occupancy(&obs.project(&geom, start.x, start.y, psi, cam.max_depth));
        let c = grid.classify_cells();
        let e = grid.map_entropy();
        let bac = balanced_accuracy(&grid.classes(), &gt)?;
        println!("{:8.0} {:7} {:9} {:8} {:9.4} {:7.4}", psi.to_degrees(), c.free, c.occupied, c.unknown, e.normalized, bac);
    }
    grid.write_pgm(BufWriter::new(File::create(&out)?))?;
    println!("map written to {}", out.display());
    Ok(())
}
