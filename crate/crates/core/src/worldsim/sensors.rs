use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::environment::Environment;
use super::world::TrueState;
use crate::error::{Error, Result};
use crate::geometry::Pose2D;
use crate::kinematics::{KinematicParams, WheelCommand};
use crate::raycast::{first_hit, traverse, GridGeometry};

/// Number of LRF beams: one per degree over a full sweep.
pub const LRF_BEAMS: usize = 360;

/// Largest angular spacing between camera rays.
pub const CAMERA_RAY_SPACING: f64 = 0.5 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    /// Horizontal field of view, radians.
    pub fov: f64,
    /// Maximum sensing depth, meters.
    pub max_depth: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self { fov: 69.4_f64.to_radians(), max_depth: 4.0 }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov > 0.0 && self.fov < 2.0 * PI) {
            return Err(Error::InvalidParameter("camera fov must lie in (0, 2π)".into()));
        }
        if !(self.max_depth > 0.0) {
            return Err(Error::InvalidParameter("camera max depth must be positive".into()));
        }
        Ok(())
    }

    /// Ray bearings relative to the optical axis, evenly spaced from `-fov/2`
    /// to `+fov/2` inclusive.
    pub fn ray_bearings(&self) -> Vec<f64> {
        let n = (self.fov / CAMERA_RAY_SPACING).ceil() as usize + 1;
        let step = self.fov / (n - 1) as f64;
        (0..n).map(|i| -0.5 * self.fov + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Gyro white noise, rad/s.
    pub gyro_sigma: f64,
    /// Scan-match translation noise slope (per meter moved) and floor (m).
    pub a_t: f64,
    pub b_t: f64,
    /// Scan-match rotation noise slope (per radian turned) and floor (rad).
    pub a_r: f64,
    pub b_r: f64,
    /// Wheel encoder rate noise per wheel, rad/s.
    pub wheel_sigma: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { gyro_sigma: 0.01, a_t: 0.02, b_t: 0.001, a_r: 0.02, b_r: 0.0005, wheel_sigma: 0.25 }
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self { gyro_sigma: 0.0, a_t: 0.0, b_t: 0.0, a_r: 0.0, b_r: 0.0, wheel_sigma: 0.0 }
    }
}

/// One camera ray as the sensor reports it: bearing relative to the optical
/// axis, measured range and whether the ray ended on an obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraRay {
    pub bearing: f64,
    pub range: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CameraObservation {
    pub rays: Vec<CameraRay>,
    /// Distinct cells seen from the true pose, in first-seen order, with
    /// `true` for the terminal occupied cell of a ray.
    pub cells: Vec<(usize, bool)>,
}

impl CameraObservation {
    /// Re-projects the rays from a (possibly wrong) sensor pose onto a grid.
    /// From the true pose this reproduces `cells`.
    pub fn project(&self, geom: &GridGeometry, x: f64, y: f64, psi: f64, max_depth: f64) -> Vec<(usize, bool)> {
        let mut out: Vec<(usize, bool)> = Vec::with_capacity(self.rays.len() * 40);
        let mut mark = vec![u32::MAX; geom.len()];
        for ray in &self.rays {
            if !ray.hit {
                traverse(geom, [x, y], psi + ray.bearing, max_depth, |idx, t| {
                    if t >= max_depth {
                        return false;
                    }
                    push_cell(&mut out, &mut mark, idx, false);
                    true
                });
                continue;
            }
            let mut endpoint = None;
            traverse(geom, [x, y], psi + ray.bearing, f64::INFINITY, |idx, t| {
                if t > ray.range {
                    return false;
                }
                push_cell(&mut out, &mut mark, idx, false);
                endpoint = Some(idx);
                true
            });
            if let Some(idx) = endpoint {
                push_cell(&mut out, &mut mark, idx, true);
            }
        }
        out
    }
}

/// `mark[idx]` holds the position of `idx` in `out`, or `u32::MAX`.
fn push_cell(out: &mut Vec<(usize, bool)>, mark: &mut [u32], idx: usize, occ: bool) {
    match mark[idx] {
        u32::MAX => {
            mark[idx] = out.len() as u32;
            out.push((idx, occ));
        }
        pos => {
            if occ {
                out[pos as usize].1 = true;
            }
        }
    }
}

fn ensure_free(env: &Environment, pose: &Pose2D) -> Result<()> {
    if !pose.is_finite() || env.occupied_at(pose.x, pose.y) {
        return Err(Error::PoseInObstacle { x: pose.x, y: pose.y });
    }
    Ok(())
}

/// Full-sweep range scan at 1° resolution starting at the robot heading.
pub fn raycast_lrf(env: &Environment, pose: &Pose2D, max_range: f64) -> Result<Vec<f64>> {
    ensure_free(env, pose)?;
    let start = [pose.x, pose.y];
    Ok((0..LRF_BEAMS)
        .map(|k| {
            let angle = pose.theta + (k as f64).to_radians();
            match first_hit(&env.geometry, start, angle, max_range, |i| env.is_occupied(i)) {
                Some((_, t)) => t.min(max_range),
                None => max_range,
            }
        })
        .collect())
}

/// Camera sector observation from `(pose.x, pose.y)` looking along `psi`.
pub fn camera_observation(env: &Environment, pose: &Pose2D, psi: f64, cam: &CameraModel) -> Result<CameraObservation> {
    ensure_free(env, pose)?;
    let geom = &env.geometry;
    let mut obs = CameraObservation::default();
    let mut mark = vec![u32::MAX; geom.len()];
    for bearing in cam.ray_bearings() {
        let mut ray = CameraRay { bearing, range: cam.max_depth, hit: false };
        traverse(geom, [pose.x, pose.y], psi + bearing, cam.max_depth, |idx, t| {
            if env.is_occupied(idx) {
                ray.range = t;
                ray.hit = true;
                push_cell(&mut obs.cells, &mut mark, idx, true);
                false
            } else {
                push_cell(&mut obs.cells, &mut mark, idx, false);
                true
            }
        });
        obs.rays.push(ray);
    }
    Ok(obs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertialReading {
    pub base_gyro: f64,
    pub cam_gyro: f64,
    pub encoder_ticks: i64,
}

/// Base gyro senses only the base rotation; the camera gyro senses the
/// camera heading rate `θ̇ + γ̇`. Both draws are independent. The encoder
/// quantizes the joint angle to whole ticks.
pub fn synthesize_inertial_and_encoder<R: Rng + ?Sized>(
    state: &TrueState,
    noise: &NoiseConfig,
    tick: f64,
    rng: &mut R,
) -> InertialReading {
    let base_rate = state.twist.dtheta;
    let cam_rate = state.twist.dtheta + state.dgamma;
    InertialReading {
        base_gyro: base_rate + noise.gyro_sigma * gaussian(rng),
        cam_gyro: cam_rate + noise.gyro_sigma * gaussian(rng),
        encoder_ticks: (state.gamma / tick).round() as i64,
    }
}

/// Relative motion between consecutive scans, in the frame of the earlier
/// pose, with the covariance it was sampled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometryDelta {
    pub delta: Pose2D,
    pub cov: Matrix3<f64>,
}

impl OdometryDelta {
    pub fn sigma_xy(&self) -> f64 {
        self.cov[(0, 0)].sqrt()
    }

    pub fn sigma_theta(&self) -> f64 {
        self.cov[(2, 2)].sqrt()
    }
}

/// Scan-match odometry surrogate: true relative motion plus zero-mean noise
/// whose spread grows with the motion.
pub fn scan_match_odometry<R: Rng + ?Sized>(
    prev: &Pose2D,
    curr: &Pose2D,
    noise: &NoiseConfig,
    rng: &mut R,
) -> OdometryDelta {
    let truth = prev.between(curr);
    let s_xy = noise.a_t * truth.x.hypot(truth.y) + noise.b_t;
    let s_th = noise.a_r * truth.theta.abs() + noise.b_r;
    let delta = Pose2D {
        x: truth.x + s_xy * gaussian(rng),
        y: truth.y + s_xy * gaussian(rng),
        theta: truth.theta + s_th * gaussian(rng),
    };
    OdometryDelta { delta, cov: Matrix3::from_diagonal(&Vector3::new(s_xy * s_xy, s_xy * s_xy, s_th * s_th)) }
}

/// Body-frame twist `[u, w, r]` recovered from noisy wheel encoder rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelOdometry {
    pub body: [f64; 3],
    pub cov: Matrix3<f64>,
}

pub fn wheel_odometry<R: Rng + ?Sized>(
    cmd: &WheelCommand,
    kin: &KinematicParams,
    noise: &NoiseConfig,
    rng: &mut R,
) -> WheelOdometry {
    let noisy = Vector3::new(
        cmd.wheels[0] + noise.wheel_sigma * gaussian(rng),
        cmd.wheels[1] + noise.wheel_sigma * gaussian(rng),
        cmd.wheels[2] + noise.wheel_sigma * gaussian(rng),
    );
    let inv = kin.wheel_matrix().try_inverse().unwrap_or_else(Matrix3::zeros) * kin.wheel_radius;
    let body = inv * noisy;
    let cov = inv * inv.transpose() * noise.wheel_sigma.powi(2);
    WheelOdometry { body: [body[0], body[1], body[2]], cov }
}

/// Everything the robot senses at one frame.
#[derive(Debug, Clone)]
pub struct SensorFrame {
    pub time: f64,
    pub lrf_ranges: Vec<f64>,
    pub camera: CameraObservation,
    pub imu_base_gyro: f64,
    pub imu_cam_gyro: f64,
    pub encoder_ticks: i64,
    pub odom_delta: OdometryDelta,
    pub wheel_odom: WheelOdometry,
}

pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
