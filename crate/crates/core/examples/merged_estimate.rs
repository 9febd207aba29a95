//! Robot and camera filters driven along a turning trajectory, then merged
//! into one camera-pose estimate with and without the camera variance.
//!
//! ```text
//! cargo run --example merged_estimate
//! ```

use nalgebra::Matrix3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use activecam::estimation::{
    differential_imu, merge_states, CameraFilter, Composition, GyroSample, JointModel, RobotFilter,
    RobotFilterConfig, TimedEstimate,
};
use activecam::geometry::Pose2D;
use activecam::kinematics::{ExtendedVelocity, KinematicParams};
use activecam::raycast::GridGeometry;
use activecam::worldsim::{
    scan_match_odometry, synthesize_inertial_and_encoder, wheel_odometry, Command, Environment, NoiseConfig, World,
};

fn main() -> activecam::Result<()> {
    let geom = GridGeometry::new(200, 200, 0.05, [0.0, 0.0]);
    let walls = (0..geom.len())
        .map(|i| {
            let (x, y) = geom.coords(i);
            x == 0 || y == 0 || x == geom.width - 1 || y == geom.height - 1
        })
        .collect();
    let env = Environment::new(geom, walls)?;
    let kin = KinematicParams::default();
    let noise = NoiseConfig::default();
    let tick = 0.5f64.to_radians();
    let dt = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let start = Pose2D::new(5.0, 5.0, 0.0);
    let mut world = World::new(env, kin.clone(), 0.2, 0.01, start)?;
    let mut robot = RobotFilter::new(start, Matrix3::identity() * 1e-6, [1e-4; 3], RobotFilterConfig::default())?;
    let mut camera = CameraFilter::new(0.0, [1e-6, 1e-4], tick, JointModel::default())?;

    println!("{:>5} {:>9} {:>9} {:>9} {:>9} {:>9}", "t", "psi err", "var th", "var gam", "var psi", "var NC");
    for k in 0..200 {
        let t = (k + 1) as f64 * dt;
        let cmd = ExtendedVelocity::new(0.2 * (0.05 * t).cos(), 0.2 * (0.05 * t).sin(), 0.3 * (0.4 * t).sin(), 0.8 * (0.25 * t).cos());
        let prev = world.state().pose;
        world.step(Command::Velocity(cmd), dt)?;
        let s = *world.state();

        let odom = wheel_odometry(world.last_wheels(), &kin, &noise, &mut rng);
        let delta = scan_match_odometry(&prev, &s.pose, &noise, &mut rng);
        let imu = synthesize_inertial_and_encoder(&s, &noise, tick, &mut rng);
        robot.update_wheel_odometry(&odom, dt)?;
        robot.update_gyro(imu.base_gyro, noise.gyro_sigma.powi(2))?;
        robot.update_scan_match(&delta, dt)?;
        robot.predict(dt)?;
        camera.update_rate(&differential_imu(GyroSample { rate: imu.base_gyro, time: t }, GyroSample { rate: imu.cam_gyro, time: t })?)?;
        camera.predict(dt)?;
        camera.update_encoder(imu.encoder_ticks)?;

        if (k + 1) % 40 == 0 {
            let r = TimedEstimate { est: robot.estimate().clone(), time: t };
            let c = TimedEstimate { est: camera.estimate().clone(), time: t };
            let merged = merge_states(&r, &c, Composition::Merged)?;
            let nc = merge_states(&r, &c, Composition::NoComposition)?;
            let err = activecam::geometry::wrap_angle(merged.psi - s.camera_heading());
            println!(
                "{t:5.1} {err:9.5} {:9.2e} {:9.2e} {:9.2e} {:9.2e}",
                r.est.cov[(2, 2)],
                c.est.cov[(0, 0)],
                merged.cov[(2, 2)],
                nc.cov[(2, 2)]
            );
        }
    }
    Ok(())
}
