//! Wheel speeds of the three-wheel omnidirectional base, with and without the
//! camera joint, and the wheel-rotation energy proxy.
//!
//! ```text
//! cargo run --example wheel_kinematics
//! ```

use activecam::kinematics::{
    accumulate_wheel_rotation, extended_wheel_speeds, global_velocity_from_wheels, wheel_speeds, ExtendedVelocity,
    GlobalVelocity, KinematicParams,
};

fn main() -> activecam::Result<()> {
    let p = KinematicParams::default();
    println!("D = {} m, r = {} m, alpha = {:?}", p.wheel_center_distance, p.wheel_radius, p.wheel_angles);

    let cases = [
        ("forward 1 m/s", GlobalVelocity::new(1.0, 0.0, 0.0)),
        ("sideways 1 m/s", GlobalVelocity::new(0.0, 1.0, 0.0)),
        ("spin 1 rad/s", GlobalVelocity::new(0.0, 0.0, 1.0)),
    ];
    for (name, v) in cases {
        let w = wheel_speeds(0.0, &v, &p)?;
        let back = global_velocity_from_wheels(0.0, &w, &p)?;
        println!(
            "{name:>15}: wheels [{:8.3} {:8.3} {:8.3}] rad/s, sum {:+.1e}, recovered ({:.3}, {:.3}, {:.3})",
            w.wheels[0],
            w.wheels[1],
            w.wheels[2],
            w.wheels.iter().sum::<f64>(),
            back.vx,
            back.vy,
            back.dtheta
        );
    }

    let turn = ExtendedVelocity::new(0.0, 0.0, 1.0, -1.0);
    let w = extended_wheel_speeds(0.0, &turn, &p)?;
    println!("base spins while the camera counter-rotates: joint {:?}, world heading rate {}", w.joint, turn.heading_rate());

    // One meter straight ahead versus the same meter with a half turn of the base.
    let dt = 0.01;
    let mut straight = 0.0;
    let mut turning = 0.0;
    for _ in 0..100 {
        straight = accumulate_wheel_rotation(&wheel_speeds(0.0, &GlobalVelocity::new(1.0, 0.0, 0.0), &p)?, dt, straight);
    }
    let mut theta = 0.0;
    for _ in 0..100 {
        let v = GlobalVelocity::new(1.0, 0.0, std::f64::consts::PI);
        turning = accumulate_wheel_rotation(&wheel_speeds(theta, &v, &p)?, dt, turning);
        theta += v.dtheta * dt;
    }
    println!("wheel rotation per meter: straight {straight:.2} rad, with a half turn {turning:.2} rad");
    Ok(())
}
