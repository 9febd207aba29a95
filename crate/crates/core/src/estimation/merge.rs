use std::io::Write;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Matrix6};

use super::ekf::{update_with_gain_mask, GaussianEstimate, Measurement};
use super::{camera, robot};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose2D};

/// Fixed variance of the differential IMU rate, rad²/s².
pub const DIFFERENTIAL_IMU_VARIANCE: f64 = 0.01;

/// Largest timestamp gap accepted when pairing measurements or estimates.
pub const TIME_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroSample {
    pub rate: f64,
    pub time: f64,
}

/// Joint rate seen as the difference between the camera and base gyros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferentialImuMeasurement {
    pub rel_rate: f64,
    pub variance: f64,
}

pub fn differential_imu(base: GyroSample, cam: GyroSample) -> Result<DifferentialImuMeasurement> {
    differential_imu_with_tolerance(base, cam, TIME_TOLERANCE)
}

pub fn differential_imu_with_tolerance(base: GyroSample, cam: GyroSample, tol: f64) -> Result<DifferentialImuMeasurement> {
    if (base.time - cam.time).abs() > tol {
        return Err(Error::TimestampMismatch { a: base.time, b: cam.time, tol });
    }
    if !base.rate.is_finite() || !cam.rate.is_finite() {
        return Err(Error::NonFinite("gyro rate"));
    }
    Ok(DifferentialImuMeasurement { rel_rate: cam.rate - base.rate, variance: DIFFERENTIAL_IMU_VARIANCE })
}

/// An estimate tagged with its timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedEstimate {
    pub est: GaussianEstimate,
    pub time: f64,
}

/// Linear interpolation of the mean (angles along the shorter arc) and the
/// covariance of the nearer endpoint.
pub fn interpolate_estimate(a: &TimedEstimate, b: &TimedEstimate, time: f64) -> Result<TimedEstimate> {
    if a.est.dim() != b.est.dim() {
        return Err(Error::InvalidParameter("estimates differ in dimension".into()));
    }
    let span = b.time - a.time;
    let s = if span.abs() < 1e-12 { 0.0 } else { ((time - a.time) / span).clamp(0.0, 1.0) };
    let mut mean = &a.est.mean + (&b.est.mean - &a.est.mean) * s;
    for &i in &a.est.angular {
        mean[i] = wrap_angle(a.est.mean[i] + s * wrap_angle(b.est.mean[i] - a.est.mean[i]));
    }
    let cov = if s <= 0.5 { a.est.cov.clone() } else { b.est.cov.clone() };
    Ok(TimedEstimate { est: GaussianEstimate { mean, cov, angular: a.est.angular.clone() }, time })
}

/// How the camera estimate enters the merged heading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Composition {
    /// Heading variance is the sum of base and joint variances.
    Merged,
    /// Joint angle treated as exact: only the robot variance is kept.
    NoComposition,
}

/// Camera pose in the world: position and velocity of the base with the
/// camera heading `ψ = θ + γ`. `vx` and `vy` are expressed in the base frame.
/// Covariance order is `[x, y, ψ, vx, vy, dψ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub vx: f64,
    pub vy: f64,
    pub dpsi: f64,
    pub cov: Matrix6<f64>,
    pub time: f64,
}

impl MergedState {
    pub fn pose(&self) -> Pose2D {
        Pose2D::new(self.x, self.y, self.psi)
    }

    pub fn pose_cov(&self) -> Matrix3<f64> {
        self.cov.fixed_view::<3, 3>(0, 0).into_owned()
    }

    /// Covariance of `(vx, vy, dψ)`.
    pub fn velocity_cov(&self) -> Matrix3<f64> {
        self.cov.fixed_view::<3, 3>(3, 3).into_owned()
    }

    pub fn to_estimate(&self) -> GaussianEstimate {
        GaussianEstimate {
            mean: DVector::from_vec(vec![self.x, self.y, self.psi, self.vx, self.vy, self.dpsi]),
            cov: DMatrix::from_iterator(6, 6, self.cov.iter().copied()),
            angular: vec![2],
        }
    }
}

/// Composes the robot estimate `[x, y, θ, u, w, r]` with the camera estimate
/// `[γ, dγ]` taken at the same time.
pub fn merge_states(robot_est: &TimedEstimate, camera_est: &TimedEstimate, composition: Composition) -> Result<MergedState> {
    if (robot_est.time - camera_est.time).abs() > TIME_TOLERANCE {
        return Err(Error::TimestampMismatch { a: robot_est.time, b: camera_est.time, tol: TIME_TOLERANCE });
    }
    let r = &robot_est.est;
    let c = &camera_est.est;
    if r.dim() != 6 || c.dim() != 2 {
        return Err(Error::InvalidParameter("expected 6-D robot and 2-D camera estimates".into()));
    }
    let mut cov = Matrix6::from_iterator(r.cov.iter().copied());
    if composition == Composition::Merged {
        cov[(robot::THETA, robot::THETA)] += c.cov[(camera::GAMMA, camera::GAMMA)];
        cov[(robot::R, robot::R)] += c.cov[(camera::DGAMMA, camera::DGAMMA)];
    }
    Ok(MergedState {
        x: r.mean[robot::X],
        y: r.mean[robot::Y],
        psi: wrap_angle(r.mean[robot::THETA] + c.mean[camera::GAMMA]),
        vx: r.mean[robot::U],
        vy: r.mean[robot::W],
        dpsi: r.mean[robot::R] + c.mean[camera::DGAMMA],
        cov,
        time: robot_est.time,
    })
}

/// Refines only the x and y components of a pose estimate with a corrected
/// position; every other component keeps its mean and variance.
pub fn fuse_loop_closure_xy(est: &GaussianEstimate, corrected_xy: [f64; 2], cov_xy: Matrix2<f64>) -> Result<GaussianEstimate> {
    let n = est.dim();
    if n < 2 {
        return Err(Error::InvalidParameter("estimate has no x,y components".into()));
    }
    let meas = Measurement::select(n, &[0, 1], &corrected_xy, DMatrix::from_iterator(2, 2, cov_xy.iter().copied()));
    let mask: Vec<bool> = (0..n).map(|i| i < 2).collect();
    update_with_gain_mask(est, &meas, Some(&mask))
}

/// Writes `time, m0.., v0..` rows: mean and diagonal covariance per step.
pub fn write_estimate_trace<W: Write>(out: W, rows: &[TimedEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = rows.first().map_or(0, |r| r.est.dim());
    let mut header = vec!["time".to_string()];
    header.extend((0..n).map(|i| format!("mean{i}")));
    header.extend((0..n).map(|i| format!("var{i}")));
    w.write_record(&header)?;
    for row in rows {
        if row.est.dim() != n {
            return Err(Error::InvalidParameter("trace rows differ in dimension".into()));
        }
        let mut rec = vec![row.time.to_string()];
        rec.extend(row.est.mean.iter().map(|v| v.to_string()));
        rec.extend((0..n).map(|i| row.est.cov[(i, i)].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
