//! Synthetic sensors in the bundled small room: LRF sweep, camera sector,
//! both gyros with the joint encoder, and scan-match odometry.
//!
//! ```text
//! cargo run --example sensing
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use activecam::geometry::Pose2D;
use activecam::harness::{load_environment, ExperimentConfig};
use activecam::kinematics::ExtendedVelocity;
use activecam::worldsim::{
    camera_observation, raycast_lrf, scan_match_odometry, synthesize_inertial_and_encoder, Command, NoiseConfig, World,
};

fn main() -> activecam::Result<()> {
    let cfg = ExperimentConfig::load(std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/small_room.toml")))?;
    let env = load_environment(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = NoiseConfig::default();
    let cam = cfg.sensors.camera();

    let mut world = World::new(env.clone(), cfg.kin.clone(), cfg.sim.robot_radius, cfg.sim.dt, cfg.start_pose())?;
    let ranges = raycast_lrf(&env, &world.state().pose, cfg.sensors.lrf_range)?;
    let nearest = ranges.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("LRF: {} beams, nearest return {nearest:.3} m", ranges.len());

    let prev = world.state().pose;
    for _ in 0..10 {
        world.step(Command::Velocity(ExtendedVelocity::new(0.3, 0.0, 0.2, 0.5)), 0.1)?;
    }
    let s = *world.state();
    let obs = camera_observation(&env, &s.pose, s.camera_heading(), &cam)?;
    let hits = obs.cells.iter().filter(|c| c.1).count();
    println!("camera: {} rays, {} distinct cells, {} on obstacles", obs.rays.len(), obs.cells.len(), hits);

    let imu = synthesize_inertial_and_encoder(&s, &noise, cfg.sensors.encoder_tick(), &mut rng);
    println!(
        "gyros: base {:.3} rad/s (true {:.3}), camera {:.3} rad/s (true {:.3}); encoder {} ticks for gamma {:.3} rad",
        imu.base_gyro,
        s.twist.dtheta,
        imu.cam_gyro,
        s.twist.dtheta + s.dgamma,
        imu.encoder_ticks,
        s.gamma
    );

    let odom = scan_match_odometry(&prev, &s.pose, &noise, &mut rng);
    let truth: Pose2D = prev.between(&s.pose);
    println!(
        "scan match: ({:.3}, {:.3}, {:.3}) vs true ({:.3}, {:.3}, {:.3}), sigma_xy {:.4} m",
        odom.delta.x,
        odom.delta.y,
        odom.delta.theta,
        truth.x,
        truth.y,
        truth.theta,
        odom.sigma_xy()
    );
    Ok(())
}
