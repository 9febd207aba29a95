//! Wheel-speed maps for the three-wheel omnidirectional base and the camera
//! joint.
//!
//! The base map is `ω = G · S_L · T_R(θ) · ẋ_G` where `T_R` rotates global
//! velocities into the robot frame, `S_L` projects them onto each wheel's
//! rolling direction and `G = diag(1/r)`. The extended map adds the camera
//! joint as a fourth row that sums the base and joint rates: a base rotation
//! is carried through the joint, so the joint actuator only sees the camera's
//! rotation with respect to the world.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose2D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicParams {
    /// Distance from the robot center to each wheel, meters.
    #[serde(rename = "D")]
    pub wheel_center_distance: f64,
    /// Wheel radius, meters.
    #[serde(rename = "r")]
    pub wheel_radius: f64,
    /// Angular position of each wheel in the robot frame, radians.
    #[serde(rename = "alpha")]
    pub wheel_angles: [f64; 3],
    #[serde(rename = "joint_gear")]
    pub joint_gear_ratio: f64,
    /// Largest admissible |ω| of any base wheel, rad/s.
    pub wheel_limit: f64,
}

impl Default for KinematicParams {
    fn default() -> Self {
        Self {
            wheel_center_distance: 0.135,
            wheel_radius: 0.04,
            wheel_angles: [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0],
            joint_gear_ratio: 1.0,
            wheel_limit: 40.0,
        }
    }
}

impl KinematicParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.wheel_center_distance,
            self.wheel_radius,
            self.joint_gear_ratio,
            self.wheel_limit,
            self.wheel_angles[0],
            self.wheel_angles[1],
            self.wheel_angles[2],
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("kinematic parameters"));
        }
        if self.wheel_center_distance <= 0.0 {
            return Err(Error::InvalidParameter("kin.D must be positive".into()));
        }
        if self.wheel_radius <= 0.0 {
            return Err(Error::InvalidParameter("kin.r must be positive".into()));
        }
        if self.joint_gear_ratio == 0.0 {
            return Err(Error::InvalidParameter("kin.joint_gear must be non-zero".into()));
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                if wrap_angle(self.wheel_angles[i] - self.wheel_angles[j]).abs() < 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "wheel angles {i} and {j} coincide modulo 2π"
                    )));
                }
            }
        }
        if self.wheel_matrix().determinant().abs() < 1e-12 {
            return Err(Error::InvalidParameter("S_L is singular".into()));
        }
        Ok(())
    }

    /// `S_L`: rows `[-sin α_i, cos α_i, D]`.
    pub fn wheel_matrix(&self) -> Matrix3<f64> {
        let d = self.wheel_center_distance;
        let a = &self.wheel_angles;
        Matrix3::new(
            -a[0].sin(), a[0].cos(), d,
            -a[1].sin(), a[1].cos(), d,
            -a[2].sin(), a[2].cos(), d,
        )
    }

    /// `G = diag(1/r)`.
    pub fn gear_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal_element(1.0 / self.wheel_radius)
    }
}

/// `T_R(θ)`: global-to-robot rotation.
pub fn frame_rotation(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(
        c, s, 0.0,
        -s, c, 0.0,
        0.0, 0.0, 1.0,
    )
}

/// Robot velocity in the global frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlobalVelocity {
    pub vx: f64,
    pub vy: f64,
    pub dtheta: f64,
}

impl GlobalVelocity {
    pub const fn new(vx: f64, vy: f64, dtheta: f64) -> Self {
        Self { vx, vy, dtheta }
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.dtheta.is_finite()
    }

    fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.vx, self.vy, self.dtheta)
    }

    /// Velocity expressed in the robot frame for heading `theta`.
    pub fn to_body(&self, theta: f64) -> [f64; 3] {
        let b = frame_rotation(theta) * self.as_vector();
        [b[0], b[1], b[2]]
    }
}

/// Global velocity plus the camera joint rate `dγ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExtendedVelocity {
    pub vx: f64,
    pub vy: f64,
    pub dtheta: f64,
    pub dgamma: f64,
}

impl ExtendedVelocity {
    pub const fn new(vx: f64, vy: f64, dtheta: f64, dgamma: f64) -> Self {
        Self { vx, vy, dtheta, dgamma }
    }

    pub const ZERO: ExtendedVelocity = ExtendedVelocity::new(0.0, 0.0, 0.0, 0.0);

    pub fn base(&self) -> GlobalVelocity {
        GlobalVelocity::new(self.vx, self.vy, self.dtheta)
    }

    pub fn is_finite(&self) -> bool {
        self.base().is_finite() && self.dgamma.is_finite()
    }

    /// World-frame rate of the camera heading `ψ̇ = θ̇ + γ̇`.
    pub fn heading_rate(&self) -> f64 {
        self.dtheta + self.dgamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelCommand {
    /// Base wheel rates, rad/s.
    pub wheels: [f64; 3],
    /// Camera joint actuator rate, rad/s; `None` for the plain base map.
    pub joint: Option<f64>,
}

impl WheelCommand {
    pub fn is_finite(&self) -> bool {
        self.wheels.iter().all(|w| w.is_finite()) && self.joint.is_none_or(f64::is_finite)
    }

    pub fn check_limit(&self, limit: f64) -> Result<()> {
        for &w in &self.wheels {
            if w.abs() > limit {
                return Err(Error::ActuatorLimit { value: w, limit });
            }
        }
        Ok(())
    }
}

/// Base wheel rates for a global velocity at heading `theta`.
pub fn wheel_speeds(theta: f64, v: &GlobalVelocity, p: &KinematicParams) -> Result<WheelCommand> {
    if !theta.is_finite() || !v.is_finite() {
        return Err(Error::NonFinite("wheel_speeds input"));
    }
    let w = p.gear_matrix() * (p.wheel_matrix() * (frame_rotation(theta) * v.as_vector()));
    Ok(WheelCommand { wheels: [w[0], w[1], w[2]], joint: None })
}

/// Base wheel rates plus the joint actuator rate for the extended velocity.
///
/// The base block is the plain map; the joint row of the extended rotation is
/// `[0 0 1 1]` followed by the joint gear ratio.
pub fn extended_wheel_speeds(
    theta: f64,
    v: &ExtendedVelocity,
    p: &KinematicParams,
) -> Result<WheelCommand> {
    if !v.dgamma.is_finite() {
        return Err(Error::NonFinite("extended_wheel_speeds input"));
    }
    let mut cmd = wheel_speeds(theta, &v.base(), p)?;
    cmd.joint = Some(p.joint_gear_ratio * (v.dtheta + v.dgamma));
    Ok(cmd)
}

/// Inverts the base map: global velocity producing `cmd` at heading `theta`.
pub fn global_velocity_from_wheels(
    theta: f64,
    cmd: &WheelCommand,
    p: &KinematicParams,
) -> Result<GlobalVelocity> {
    if !theta.is_finite() || !cmd.is_finite() {
        return Err(Error::NonFinite("wheel command"));
    }
    let m = p.gear_matrix() * p.wheel_matrix() * frame_rotation(theta);
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("wheel map is singular".into()))?;
    let w = Vector3::new(cmd.wheels[0], cmd.wheels[1], cmd.wheels[2]);
    let g = inv * w;
    Ok(GlobalVelocity::new(g[0], g[1], g[2]))
}

/// Inverts the extended map. A command without a joint entry leaves the
/// camera rigidly attached (`dγ = 0`).
pub fn extended_velocity_from_wheels(
    theta: f64,
    cmd: &WheelCommand,
    p: &KinematicParams,
) -> Result<ExtendedVelocity> {
    let g = global_velocity_from_wheels(theta, cmd, p)?;
    let dgamma = match cmd.joint {
        Some(j) => j / p.joint_gear_ratio - g.dtheta,
        None => 0.0,
    };
    Ok(ExtendedVelocity::new(g.vx, g.vy, g.dtheta, dgamma))
}

/// One explicit Euler step in the global frame. Returns the new pose and the
/// new camera joint angle, both wrapped to `(-π, π]`.
pub fn integrate_pose(
    x: &Pose2D,
    v: &GlobalVelocity,
    gamma: f64,
    dgamma: f64,
    dt: f64,
) -> Result<(Pose2D, f64)> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    if !x.is_finite() || !v.is_finite() || !gamma.is_finite() || !dgamma.is_finite() {
        return Err(Error::NonFinite("integrate_pose input"));
    }
    let pose = Pose2D {
        x: x.x + v.vx * dt,
        y: x.y + v.vy * dt,
        theta: wrap_angle(x.theta + v.dtheta * dt),
    };
    Ok((pose, wrap_angle(gamma + dgamma * dt)))
}

/// Adds `Σ|ω_i|·dt` over the base wheels. The joint is not part of the
/// base-energy proxy.
pub fn accumulate_wheel_rotation(cmd: &WheelCommand, dt: f64, acc: f64) -> f64 {
    acc + cmd.wheels.iter().map(|w| w.abs() * dt).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zero_velocity_gives_zero_wheels() {
        let p = KinematicParams::default();
        let w = wheel_speeds(1.234, &GlobalVelocity::default(), &p).unwrap();
        assert_eq!(w.wheels, [0.0; 3]);
        let e = extended_wheel_speeds(0.3, &ExtendedVelocity::ZERO, &p).unwrap();
        assert_eq!(e.wheels, [0.0; 3]);
        assert_eq!(e.joint, Some(0.0));
    }

    #[test]
    fn pure_rotation_is_d_over_r() {
        let p = KinematicParams::default();
        let w = wheel_speeds(-2.0, &GlobalVelocity::new(0.0, 0.0, 1.0), &p).unwrap();
        for wi in w.wheels {
            assert!(close(wi, 3.375, 1e-12));
        }
    }

    #[test]
    fn forward_unit_speed() {
        let p = KinematicParams::default();
        let w = wheel_speeds(0.0, &GlobalVelocity::new(1.0, 0.0, 0.0), &p).unwrap();
        assert!(close(w.wheels[0], 0.0, 1e-12));
        assert!(close(w.wheels[1], -21.6506, 1e-4));
        assert!(close(w.wheels[2], 21.6506, 1e-4));
    }

    #[test]
    fn counter_rotating_camera_keeps_joint_still() {
        let p = KinematicParams::default();
        let e = extended_wheel_speeds(0.0, &ExtendedVelocity::new(0.0, 0.0, 1.0, -1.0), &p).unwrap();
        for wi in e.wheels {
            assert!(close(wi, 3.375, 1e-12));
        }
        assert_eq!(e.joint, Some(0.0));
    }

    #[test]
    fn extended_forward_with_joint() {
        let p = KinematicParams::default();
        let e = extended_wheel_speeds(0.0, &ExtendedVelocity::new(1.0, 0.0, 0.0, 0.5), &p).unwrap();
        assert!(close(e.wheels[1], -21.6506, 1e-4));
        assert!(close(e.wheels[2], 21.6506, 1e-4));
        assert_eq!(e.joint, Some(0.5));
    }

    #[test]
    fn non_finite_rejected() {
        let p = KinematicParams::default();
        assert!(wheel_speeds(f64::NAN, &GlobalVelocity::default(), &p).is_err());
        assert!(wheel_speeds(0.0, &GlobalVelocity::new(f64::INFINITY, 0.0, 0.0), &p).is_err());
        assert!(extended_wheel_speeds(0.0, &ExtendedVelocity::new(0.0, 0.0, 0.0, f64::NAN), &p).is_err());
    }

    #[test]
    fn integrate_examples() {
        let (p, g) = integrate_pose(&Pose2D::default(), &GlobalVelocity::default(), 0.2, 0.0, 0.1).unwrap();
        assert_eq!(p, Pose2D::default());
        assert_eq!(g, 0.2);
        let (p, _) = integrate_pose(&Pose2D::default(), &GlobalVelocity::new(1.0, 0.0, 0.0), 0.0, 0.0, 0.1).unwrap();
        assert!(close(p.x, 0.1, 1e-15) && p.y == 0.0 && p.theta == 0.0);
        let (p, _) = integrate_pose(&Pose2D::new(0.0, 0.0, 3.0), &GlobalVelocity::new(0.0, 0.0, 10.0), 0.0, 0.0, 0.1).unwrap();
        assert!(close(p.theta, -2.28319, 1e-5));
        assert!(integrate_pose(&Pose2D::default(), &GlobalVelocity::default(), 0.0, 0.0, 0.0).is_err());
        assert!(integrate_pose(&Pose2D::default(), &GlobalVelocity::default(), 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn wheel_rotation_accounting() {
        let mut cmd = WheelCommand { wheels: [0.0; 3], joint: Some(5.0) };
        assert_eq!(accumulate_wheel_rotation(&cmd, 0.1, 2.0), 2.0);
        cmd.wheels = [1.0, 1.0, 1.0];
        assert_eq!(accumulate_wheel_rotation(&cmd, 1.0, 2.0), 5.0);
        cmd.wheels = [0.0, -21.6506, 21.6506];
        assert!(close(accumulate_wheel_rotation(&cmd, 0.1, 0.0), 4.33012, 1e-5));
    }

    #[test]
    fn validation_rejects_bad_params() {
        let mut p = KinematicParams::default();
        assert!(p.validate().is_ok());
        p.wheel_radius = 0.0;
        assert!(p.validate().is_err());
        let mut p = KinematicParams::default();
        p.wheel_angles = [0.0, 2.0 * PI, 1.0];
        assert!(p.validate().is_err());
        let mut p = KinematicParams::default();
        p.wheel_center_distance = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let p = KinematicParams::default();
        let v = ExtendedVelocity::new(0.3, -0.4, 0.7, -0.2);
        let cmd = extended_wheel_speeds(0.9, &v, &p).unwrap();
        let back = extended_velocity_from_wheels(0.9, &cmd, &p).unwrap();
        assert!(close(back.vx, v.vx, 1e-12));
        assert!(close(back.vy, v.vy, 1e-12));
        assert!(close(back.dtheta, v.dtheta, 1e-12));
        assert!(close(back.dgamma, v.dgamma, 1e-12));
    }
}
