use std::f64::consts::PI;

use activecam::geometry::Pose2D;
use activecam::kinematics::{
    accumulate_wheel_rotation, extended_velocity_from_wheels, extended_wheel_speeds, global_velocity_from_wheels,
    integrate_pose, wheel_speeds, ExtendedVelocity, GlobalVelocity, KinematicParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::wheel_oracle;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn stated_wheel_speeds() {
    let p = KinematicParams::default();
    let cmd = wheel_speeds(0.0, &GlobalVelocity::new(1.0, 0.0, 0.0), &p).unwrap();
    let o = wheel_oracle(0.0, [1.0, 0.0, 0.0], p.wheel_center_distance, 0.04, p.wheel_angles);
    for i in 0..3 {
        assert!(close(cmd.wheels[i], o[i], 1e-12));
    }
    assert!(cmd.wheels[0].abs() < 1e-12);
    assert!((cmd.wheels[1] + 21.6506).abs() < 1e-4);
    assert!((cmd.wheels[2] - 21.6506).abs() < 1e-4);

    let ext = extended_wheel_speeds(0.0, &ExtendedVelocity::new(1.0, 0.0, 0.0, 0.5), &p).unwrap();
    assert_eq!(ext.wheels, cmd.wheels);
    assert_eq!(ext.joint, Some(0.5));

    let acc = accumulate_wheel_rotation(&cmd, 0.1, 1.0);
    assert!((acc - 1.0 - 4.33013).abs() < 1e-5);
}

#[test]
fn wrap_on_integration() {
    let (pose, gamma) =
        integrate_pose(&Pose2D::new(0.0, 0.0, 3.0), &GlobalVelocity::new(0.0, 0.0, 10.0), 3.0, 10.0, 0.1).unwrap();
    assert!((pose.theta - (4.0 - 2.0 * PI)).abs() < 1e-12);
    assert!((pose.theta + 2.28319).abs() < 1e-5);
    assert!((gamma + 2.28319).abs() < 1e-5);
}

#[test]
fn thousand_random_inputs_match_matrix_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let p = KinematicParams {
            wheel_center_distance: rng.random_range(0.05..0.5),
            wheel_radius: rng.random_range(0.01..0.2),
            wheel_angles: [
                rng.random_range(-0.3..0.3),
                2.0 * PI / 3.0 + rng.random_range(-0.3..0.3),
                4.0 * PI / 3.0 + rng.random_range(-0.3..0.3),
            ],
            joint_gear_ratio: rng.random_range(0.5..4.0),
            wheel_limit: 1e9,
        };
        let theta = rng.random_range(-PI..PI);
        let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let dgamma = rng.random_range(-1.0..1.0);
        let cmd = extended_wheel_speeds(theta, &ExtendedVelocity::new(v[0], v[1], v[2], dgamma), &p).unwrap();
        let o = wheel_oracle(theta, v, p.wheel_center_distance, p.wheel_radius, p.wheel_angles);
        for i in 0..3 {
            assert!(close(cmd.wheels[i], o[i], 1e-9), "wheel {i}: {} vs {}", cmd.wheels[i], o[i]);
        }
        let joint = p.joint_gear_ratio * (v[2] + dgamma);
        assert!(close(cmd.joint.unwrap(), joint, 1e-9));
    }
}

#[test]
fn pure_rotation_drives_all_wheels_equally() {
    let p = KinematicParams::default();
    for theta in [-3.0, -1.0, 0.0, 0.7, 2.5] {
        let cmd = wheel_speeds(theta, &GlobalVelocity::new(0.0, 0.0, 1.0), &p).unwrap();
        let expect = p.wheel_center_distance / p.wheel_radius;
        assert!(close(cmd.wheels[0], expect, 1e-15));
        assert_eq!(cmd.wheels[0], cmd.wheels[1]);
        assert_eq!(cmd.wheels[1], cmd.wheels[2]);
    }
}

proptest! {
    #[test]
    fn pure_translation_sums_to_zero(theta in -PI..PI, vx in -1.0f64..1.0, vy in -1.0f64..1.0) {
        let p = KinematicParams::default();
        let cmd = wheel_speeds(theta, &GlobalVelocity::new(vx, vy, 0.0), &p).unwrap();
        let sum: f64 = cmd.wheels.iter().sum();
        prop_assert!(sum.abs() <= 1e-12 * cmd.wheels.iter().map(|w| w.abs()).sum::<f64>().max(1.0));
    }

    #[test]
    fn pure_rotation_is_uniform(theta in -PI..PI, w in -1.0f64..1.0) {
        let p = KinematicParams::default();
        let cmd = wheel_speeds(theta, &GlobalVelocity::new(0.0, 0.0, w), &p).unwrap();
        prop_assert_eq!(cmd.wheels[0], cmd.wheels[1]);
        prop_assert_eq!(cmd.wheels[1], cmd.wheels[2]);
    }

    #[test]
    fn inverse_round_trips(theta in -PI..PI, vx in -1.0f64..1.0, vy in -1.0f64..1.0, w in -1.0f64..1.0, dg in -1.0f64..1.0) {
        let p = KinematicParams::default();
        let v = ExtendedVelocity::new(vx, vy, w, dg);
        let cmd = extended_wheel_speeds(theta, &v, &p).unwrap();
        let back = extended_velocity_from_wheels(theta, &cmd, &p).unwrap();
        prop_assert!((back.vx - vx).abs() < 1e-9);
        prop_assert!((back.vy - vy).abs() < 1e-9);
        prop_assert!((back.dtheta - w).abs() < 1e-9);
        prop_assert!((back.dgamma - dg).abs() < 1e-9);
        let g = global_velocity_from_wheels(theta, &cmd, &p).unwrap();
        prop_assert!((g.vx - vx).abs() < 1e-9 && (g.vy - vy).abs() < 1e-9 && (g.dtheta - w).abs() < 1e-9);
    }

    #[test]
    fn joint_row_carries_world_heading_rate(theta in -PI..PI, w in -1.0f64..1.0, dg in -1.0f64..1.0, gear in 0.5f64..4.0) {
        let p = KinematicParams { joint_gear_ratio: gear, ..KinematicParams::default() };
        let cmd = extended_wheel_speeds(theta, &ExtendedVelocity::new(0.0, 0.0, w, dg), &p).unwrap();
        prop_assert_eq!(cmd.joint.unwrap(), gear * (w + dg));
    }

    #[test]
    fn wheel_rotation_is_monotone(a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0, dt in 0.001f64..1.0) {
        let cmd = activecam::kinematics::WheelCommand { wheels: [a, b, c], joint: Some(100.0) };
        let acc = accumulate_wheel_rotation(&cmd, dt, 2.0);
        prop_assert!(acc >= 2.0);
        prop_assert!((acc - 2.0 - (a.abs() + b.abs() + c.abs()) * dt).abs() < 1e-9);
    }

    #[test]
    fn integrated_heading_stays_wrapped(theta in -PI..PI, w in -10.0f64..10.0, dt in 0.001f64..1.0) {
        let (pose, gamma) = integrate_pose(&Pose2D::new(0.0, 0.0, theta), &GlobalVelocity::new(0.0, 0.0, w), theta, w, dt).unwrap();
        prop_assert!(pose.theta > -PI && pose.theta <= PI);
        prop_assert!(gamma > -PI && gamma <= PI);
    }
}

#[test]
fn rejects_non_finite_and_bad_steps() {
    let p = KinematicParams::default();
    assert!(wheel_speeds(f64::NAN, &GlobalVelocity::new(1.0, 0.0, 0.0), &p).is_err());
    assert!(wheel_speeds(0.0, &GlobalVelocity::new(f64::INFINITY, 0.0, 0.0), &p).is_err());
    assert!(integrate_pose(&Pose2D::default(), &GlobalVelocity::default(), 0.0, 0.0, 0.0).is_err());
    assert!(integrate_pose(&Pose2D::default(), &GlobalVelocity::default(), 0.0, 0.0, -0.1).is_err());
}
