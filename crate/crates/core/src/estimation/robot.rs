use nalgebra::{DMatrix, DVector, Matrix3};

use super::ekf::{ekf_predict, ekf_update, GaussianEstimate, Measurement, MotionModel};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose2D};
use crate::worldsim::{OdometryDelta, WheelOdometry};

pub const X: usize = 0;
pub const Y: usize = 1;
pub const THETA: usize = 2;
pub const U: usize = 3;
pub const W: usize = 4;
pub const R: usize = 5;

/// Planar motion with forward, lateral and yaw rates.
///
/// State `[x, y, θ, u, w, r]`. `u` and `w` are the mean body velocities over
/// the coming interval expressed in the robot frame at its start, so the pose
/// update is exact for any constant twist. Velocities follow a random walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotModel {
    /// Translational acceleration noise, m/s².
    pub accel_sigma: f64,
    /// Yaw acceleration noise, rad/s².
    pub yaw_accel_sigma: f64,
    /// Additive pose diffusion per second.
    pub pose_diffusion: f64,
}

impl Default for RobotModel {
    fn default() -> Self {
        Self { accel_sigma: 10.0, yaw_accel_sigma: 10.0, pose_diffusion: 1e-9 }
    }
}

impl MotionModel for RobotModel {
    fn propagate(&self, s: &DVector<f64>, dt: f64) -> DVector<f64> {
        let (sn, c) = s[THETA].sin_cos();
        let mut out = s.clone();
        out[X] += (s[U] * c - s[W] * sn) * dt;
        out[Y] += (s[U] * sn + s[W] * c) * dt;
        out[THETA] = wrap_angle(s[THETA] + s[R] * dt);
        out
    }

    fn jacobian(&self, s: &DVector<f64>, dt: f64) -> DMatrix<f64> {
        let (sn, c) = s[THETA].sin_cos();
        let mut f = DMatrix::identity(6, 6);
        f[(X, THETA)] = (-s[U] * sn - s[W] * c) * dt;
        f[(X, U)] = c * dt;
        f[(X, W)] = -sn * dt;
        f[(Y, THETA)] = (s[U] * c - s[W] * sn) * dt;
        f[(Y, U)] = sn * dt;
        f[(Y, W)] = c * dt;
        f[(THETA, R)] = dt;
        f
    }

    fn process_noise(&self, _s: &DVector<f64>, dt: f64) -> DMatrix<f64> {
        let qa = (self.accel_sigma * dt).powi(2);
        let qr = (self.yaw_accel_sigma * dt).powi(2);
        let qp = self.pose_diffusion * dt;
        DMatrix::from_diagonal(&DVector::from_vec(vec![qp, qp, qp, qa, qa, qr]))
    }
}

/// `(1/dt)·∫ R(r·τ) dτ` over `[0, dt]`, the map from a constant body twist to
/// the mean velocity in the start frame, and its derivative in `r`. With a
/// positive `substep` the integral is the left Riemann sum the simulator uses.
fn chord_factor(rate: f64, dt: f64, substep: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let n = if substep > 0.0 { (dt / substep).round().max(1.0) as usize } else { 0 };
    if n == 0 {
        let phi = rate * dt;
        let (a, b, da, db) = if phi.abs() < 1e-6 {
            (1.0 - phi * phi / 6.0, 0.5 * phi, -phi / 3.0, 0.5)
        } else {
            let (s, c) = phi.sin_cos();
            (s / phi, (1.0 - c) / phi, (phi * c - s) / (phi * phi), (phi * s - (1.0 - c)) / (phi * phi))
        };
        return ([[a, -b], [b, a]], [[da * dt, -db * dt], [db * dt, da * dt]]);
    }
    let h = dt / n as f64;
    let (mut a, mut b, mut da, mut db) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..n {
        let tj = j as f64 * h;
        let (s, c) = (rate * tj).sin_cos();
        a += c;
        b += s;
        da -= s * tj;
        db += c * tj;
    }
    let k = 1.0 / n as f64;
    ([[a * k, -b * k], [b * k, a * k]], [[da * k, -db * k], [db * k, da * k]])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotFilterConfig {
    pub model: RobotModel,
    /// Integration step of the wheel-odometry twist; 0 for the exact arc.
    pub odometry_substep: f64,
}

impl Default for RobotFilterConfig {
    fn default() -> Self {
        Self { model: RobotModel::default(), odometry_substep: 0.01 }
    }
}

/// Robot pose filter fusing wheel odometry, the base gyro and scan-match
/// odometry. Each frame first updates the interval velocities from the
/// measurements covering it, then predicts across the interval.
#[derive(Debug, Clone)]
pub struct RobotFilter {
    pub cfg: RobotFilterConfig,
    est: GaussianEstimate,
}

impl RobotFilter {
    pub fn new(pose: Pose2D, pose_cov: Matrix3<f64>, velocity_var: [f64; 3], cfg: RobotFilterConfig) -> Result<Self> {
        let mean = DVector::from_vec(vec![pose.x, pose.y, wrap_angle(pose.theta), 0.0, 0.0, 0.0]);
        let mut cov = DMatrix::zeros(6, 6);
        cov.view_mut((0, 0), (3, 3)).copy_from(&pose_cov);
        for i in 0..3 {
            cov[(3 + i, 3 + i)] = velocity_var[i];
        }
        Ok(Self { cfg, est: GaussianEstimate::new(mean, cov, vec![THETA])? })
    }

    pub fn from_estimate(est: GaussianEstimate, cfg: RobotFilterConfig) -> Result<Self> {
        if est.dim() != 6 {
            return Err(Error::InvalidParameter("robot estimate must be 6-dimensional".into()));
        }
        Ok(Self { cfg, est })
    }

    pub fn estimate(&self) -> &GaussianEstimate {
        &self.est
    }

    pub fn set_estimate(&mut self, est: GaussianEstimate) {
        self.est = est;
    }

    pub fn pose(&self) -> Pose2D {
        Pose2D::new(self.est.mean[X], self.est.mean[Y], self.est.mean[THETA])
    }

    /// Body twist from the wheel encoders, held over `dt`.
    pub fn update_wheel_odometry(&mut self, odom: &WheelOdometry, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        let [u, w, r] = odom.body;
        let (m, dm) = chord_factor(r, dt, self.cfg.odometry_substep);
        let z = [m[0][0] * u + m[0][1] * w, m[1][0] * u + m[1][1] * w, r];
        let j = Matrix3::new(
            m[0][0], m[0][1], dm[0][0] * u + dm[0][1] * w,
            m[1][0], m[1][1], dm[1][0] * u + dm[1][1] * w,
            0.0, 0.0, 1.0,
        );
        let cov = j * odom.cov * j.transpose();
        let meas = Measurement::select(6, &[U, W, R], &z, DMatrix::from_iterator(3, 3, cov.iter().copied()));
        self.est = ekf_update(&self.est, &meas)?;
        Ok(())
    }

    pub fn update_gyro(&mut self, rate: f64, variance: f64) -> Result<()> {
        let meas = Measurement::select(6, &[R], &[rate], DMatrix::from_element(1, 1, variance));
        self.est = ekf_update(&self.est, &meas)?;
        Ok(())
    }

    /// Scan-match displacement over `dt`, read as a mean velocity.
    pub fn update_scan_match(&mut self, odom: &OdometryDelta, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        let z = [odom.delta.x / dt, odom.delta.y / dt, odom.delta.theta / dt];
        let cov = odom.cov / (dt * dt);
        let meas = Measurement::select(6, &[U, W, R], &z, DMatrix::from_iterator(3, 3, cov.iter().copied()));
        self.est = ekf_update(&self.est, &meas)?;
        Ok(())
    }

    pub fn predict(&mut self, dt: f64) -> Result<()> {
        self.est = ekf_predict(&self.est, &self.cfg.model, dt)?;
        Ok(())
    }
}

/// Normalized estimation error squared of the pose block.
pub fn pose_nees(est: &GaussianEstimate, truth: &Pose2D) -> Result<f64> {
    let e = nalgebra::Vector3::new(
        est.mean[X] - truth.x,
        est.mean[Y] - truth.y,
        wrap_angle(est.mean[THETA] - truth.theta),
    );
    let p: Matrix3<f64> = est.cov.fixed_view::<3, 3>(0, 0).into_owned();
    let inv = p.try_inverse().ok_or(Error::SingularSystem)?;
    Ok((e.transpose() * inv * e)[0])
}
