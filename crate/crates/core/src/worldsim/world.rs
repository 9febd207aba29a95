use crate::error::{Error, Result};
use crate::geometry::Pose2D;
use crate::kinematics::{
    accumulate_wheel_rotation, extended_velocity_from_wheels, extended_wheel_speeds, integrate_pose, wheel_speeds,
    ExtendedVelocity, GlobalVelocity, KinematicParams, WheelCommand,
};

use super::environment::Environment;

/// Ground-truth robot and camera state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrueState {
    pub pose: Pose2D,
    /// Camera yaw relative to the base.
    pub gamma: f64,
    /// Global velocity applied during the last step.
    pub twist: GlobalVelocity,
    pub dgamma: f64,
    pub time: f64,
}

impl TrueState {
    /// World heading of the camera, `θ + γ`.
    pub fn camera_heading(&self) -> f64 {
        crate::geometry::wrap_angle(self.pose.theta + self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    /// Wheel rates held constant over the step.
    Wheels(WheelCommand),
    /// Global-frame velocity, converted to wheel rates at the true heading
    /// at the start of the step.
    Velocity(ExtendedVelocity),
}

/// One simulated trial world. Stepping is single-writer.
#[derive(Debug, Clone)]
pub struct World {
    pub env: Environment,
    pub kin: KinematicParams,
    pub robot_radius: f64,
    /// Integration step, seconds.
    pub sim_dt: f64,
    state: TrueState,
    wheel_rotation: f64,
    path_length: f64,
    in_contact: bool,
    last_wheels: WheelCommand,
}

impl World {
    pub fn new(env: Environment, kin: KinematicParams, robot_radius: f64, sim_dt: f64, start: Pose2D) -> Result<Self> {
        kin.validate()?;
        if !(sim_dt > 0.0) {
            return Err(Error::NonPositiveStep(sim_dt));
        }
        if !start.is_finite() || env.disc_collides(start.x, start.y, robot_radius) {
            return Err(Error::StartInObstacle { x: start.x, y: start.y });
        }
        let state = TrueState { pose: start, ..Default::default() };
        Ok(Self {
            env,
            kin,
            robot_radius,
            sim_dt,
            state,
            wheel_rotation: 0.0,
            path_length: 0.0,
            in_contact: false,
            last_wheels: WheelCommand::default(),
        })
    }

    pub fn state(&self) -> &TrueState {
        &self.state
    }

    /// Accumulated `Σ|ω_i|·dt` of the base wheels, radians.
    pub fn wheel_rotation(&self) -> f64 {
        self.wheel_rotation
    }

    pub fn path_length(&self) -> f64 {
        self.path_length
    }

    /// Whether the last step was cut short by an obstacle.
    pub fn in_contact(&self) -> bool {
        self.in_contact
    }

    /// Wheel rates actually realized during the last step.
    pub fn last_wheels(&self) -> &WheelCommand {
        &self.last_wheels
    }

    /// Advances the world by `dt`, sub-stepping at `sim_dt`. Translation
    /// stops at first contact; rotation of the disc-shaped robot is always
    /// applied.
    pub fn step(&mut self, cmd: Command, dt: f64) -> Result<&TrueState> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        let wheels = match cmd {
            Command::Wheels(w) => w,
            Command::Velocity(v) => {
                if !v.is_finite() {
                    return Err(Error::NonFinite("velocity command"));
                }
                extended_wheel_speeds(self.state.pose.theta, &v, &self.kin)?
            }
        };
        if !wheels.is_finite() {
            return Err(Error::NonFinite("wheel command"));
        }
        wheels.check_limit(self.kin.wheel_limit)?;

        self.in_contact = false;
        let mut realized = [0.0; 3];
        let mut joint = 0.0;
        let mut remaining = dt;
        while remaining > 1e-12 {
            let h = remaining.min(self.sim_dt);
            remaining -= h;
            let v = extended_velocity_from_wheels(self.state.pose.theta, &wheels, &self.kin)?;
            let (mut next, gamma) = integrate_pose(&self.state.pose, &v.base(), self.state.gamma, v.dgamma, h)?;
            let mut fraction = 1.0;
            if self.env.disc_collides(next.x, next.y, self.robot_radius) {
                fraction = self.free_fraction(&next);
                next.x = self.state.pose.x + fraction * (next.x - self.state.pose.x);
                next.y = self.state.pose.y + fraction * (next.y - self.state.pose.y);
                self.in_contact = true;
            }
            let achieved = GlobalVelocity::new(v.vx * fraction, v.vy * fraction, v.dtheta);
            let w = wheel_speeds(self.state.pose.theta, &achieved, &self.kin)?;
            self.wheel_rotation = accumulate_wheel_rotation(&w, h, self.wheel_rotation);
            for i in 0..3 {
                realized[i] += w.wheels[i] * h;
            }
            joint += wheels.joint.unwrap_or(0.0) * h;
            self.path_length += self.state.pose.distance(&next);
            self.state.pose = next;
            self.state.gamma = gamma;
            self.state.twist = achieved;
            self.state.dgamma = v.dgamma;
        }
        self.state.time += dt;
        self.last_wheels = WheelCommand {
            wheels: realized.map(|r| r / dt),
            joint: wheels.joint.map(|_| joint / dt),
        };
        Ok(&self.state)
    }

    /// Largest fraction of the straight move to `target` that keeps the disc
    /// clear, by bisection.
    fn free_fraction(&self, target: &Pose2D) -> f64 {
        let p0 = self.state.pose;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            let x = p0.x + mid * (target.x - p0.x);
            let y = p0.y + mid * (target.y - p0.y);
            if self.env.disc_collides(x, y, self.robot_radius) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }
}
