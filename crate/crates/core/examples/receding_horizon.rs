//! One receding-horizon solve per platform mode for the same goal: 1.5 m
//! ahead with the camera turned a quarter turn to the left.
//!
//! ```text
//! cargo run --example receding_horizon
//! ```

use nalgebra::Matrix6;

use activecam::estimation::MergedState;
use activecam::planner::{rh_solve, ControllerConfig, PlatformMode, Reference};

fn main() {
    let cfg = ControllerConfig::default();
    let state = MergedState { x: 0.0, y: 0.0, psi: 0.0, vx: 0.0, vy: 0.0, dpsi: 0.0, cov: Matrix6::zeros(), time: 0.0 };
    let path = [[0.0, 0.0], [0.75, 0.0], [1.5, 0.0]];
    let reference = Reference::along_path(&path, [state.x, state.y], std::f64::consts::FRAC_PI_2, &cfg);
    println!("{:>4} {:>7} {:>7} {:>7} {:>7} {:>6} {:>10} {:>10}", "mode", "vx", "vy", "dtheta", "dgamma", "iters", "cost", "violation");
    for mode in [PlatformMode::A, PlatformMode::HH, PlatformMode::OC, PlatformMode::Y0] {
        let sol = rh_solve(&state, 0.0, &reference, mode, &cfg, None, &|_| false);
        let u = sol.command;
        println!(
            "{:>4} {:7.3} {:7.3} {:7.3} {:7.3} {:6} {:10.4} {:10.1e}",
            mode.to_string(),
            u.vx,
            u.vy,
            u.dtheta,
            u.dgamma,
            sol.iterations,
            sol.cost_history.last().copied().unwrap_or(f64::NAN),
            sol.max_violation
        );
    }
}
