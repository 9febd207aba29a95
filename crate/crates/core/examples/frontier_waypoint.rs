//! Frontier clusters and the next (position, camera heading) goal after a
//! partial look around the small room.
//!
//! ```text
//! cargo run --example frontier_waypoint
//! ```

use nalgebra::Matrix6;

use activecam::estimation::MergedState;
use activecam::harness::{load_environment, ExperimentConfig};
use activecam::planner::{detect_frontiers, select_waypoint, NavigationMap, WaypointDecision};
use activecam::slamlite::OccupancyGrid;
use activecam::worldsim::camera_observation;

fn main() -> activecam::Result<()> {
    let cfg = ExperimentConfig::load(std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/small_room.toml")))?;
    let env = load_environment(&cfg)?;
    let geom = env.geometry;
    let cam = cfg.sensors.camera();
    let start = cfg.start_pose();

    let mut grid = OccupancyGrid::new(geom, cfg.slam.log_odds);
    for k in 0..4 {
        let psi = -0.6 + 0.4 * k as f64;
        let obs = camera_observation(&env, &start, psi, &cam)?;
        for _ in 0..3 {
            grid.update_occupancy(&obs.project(&geom, start.x, start.y, psi, cam.max_depth));
        }
    }
    let classes = grid.classes();
    let frontiers = detect_frontiers(&geom, &classes);
    println!("{} frontier clusters", frontiers.len());
    for f in &frontiers {
        println!("  {:4} cells around ({:.2}, {:.2})", f.cells.len(), f.centroid[0], f.centroid[1]);
    }

    let state = MergedState { x: start.x, y: start.y, psi: start.theta, vx: 0.0, vy: 0.0, dpsi: 0.0, cov: Matrix6::zeros(), time: 0.0 };
    let nav = NavigationMap::new(geom, classes, cfg.planner.nav);
    let Some(field) = nav.search([state.x, state.y]) else {
        println!("start cell is not traversable");
        return Ok(());
    };
    match select_waypoint(&frontiers, &state, &nav, &field, &cam, &cfg.planner, &[]) {
        WaypointDecision::Goal(w) => println!(
            "goal ({:.2}, {:.2}) looking {:.0} deg: {:.0} unknown cells for a {:.2} m path",
            w.position[0],
            w.position[1],
            w.psi.to_degrees(),
            w.utility,
            w.path_length
        ),
        WaypointDecision::ExplorationComplete => println!("nothing left to explore"),
    }
    Ok(())
}
