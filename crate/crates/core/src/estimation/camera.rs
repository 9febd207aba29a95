use nalgebra::{DMatrix, DVector};

use super::ekf::{ekf_predict, ekf_update, GaussianEstimate, Measurement, MotionModel};
use super::merge::DifferentialImuMeasurement;
use crate::error::Result;

pub const GAMMA: usize = 0;
pub const DGAMMA: usize = 1;

/// Constant-rate model of the camera joint, state `[γ, dγ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointModel {
    /// Joint acceleration noise, rad/s².
    pub accel_sigma: f64,
    pub angle_diffusion: f64,
}

impl Default for JointModel {
    fn default() -> Self {
        Self { accel_sigma: 10.0, angle_diffusion: 1e-9 }
    }
}

impl MotionModel for JointModel {
    fn propagate(&self, s: &DVector<f64>, dt: f64) -> DVector<f64> {
        DVector::from_vec(vec![crate::geometry::wrap_angle(s[GAMMA] + s[DGAMMA] * dt), s[DGAMMA]])
    }

    fn jacobian(&self, _s: &DVector<f64>, dt: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0])
    }

    fn process_noise(&self, _s: &DVector<f64>, dt: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![self.angle_diffusion * dt, (self.accel_sigma * dt).powi(2)]))
    }
}

/// Camera joint filter fusing the encoder angle and the differential IMU
/// rate. A locked filter always reports `γ = 0` with zero variance.
#[derive(Debug, Clone)]
pub struct CameraFilter {
    pub model: JointModel,
    /// Encoder tick size, radians.
    pub tick: f64,
    locked: bool,
    est: GaussianEstimate,
}

impl CameraFilter {
    pub fn new(gamma: f64, variance: [f64; 2], tick: f64, model: JointModel) -> Result<Self> {
        let est = GaussianEstimate::new(
            DVector::from_vec(vec![crate::geometry::wrap_angle(gamma), 0.0]),
            DMatrix::from_diagonal(&DVector::from_vec(variance.to_vec())),
            vec![GAMMA],
        )?;
        Ok(Self { model, tick, locked: false, est })
    }

    /// Filter for a joint that cannot move.
    pub fn locked() -> Self {
        Self {
            model: JointModel::default(),
            tick: 1.0,
            locked: true,
            est: GaussianEstimate { mean: DVector::zeros(2), cov: DMatrix::zeros(2, 2), angular: vec![GAMMA] },
        }
    }

    pub fn is_locked(&self) -> bool {
        self.locked
    }

    pub fn estimate(&self) -> &GaussianEstimate {
        &self.est
    }

    /// Encoder variance of a uniformly quantized angle, `tick²/12`.
    pub fn encoder_variance(&self) -> f64 {
        self.tick * self.tick / 12.0
    }

    pub fn update_rate(&mut self, m: &DifferentialImuMeasurement) -> Result<()> {
        if self.locked {
            return Ok(());
        }
        let meas = Measurement::select(2, &[DGAMMA], &[m.rel_rate], DMatrix::from_element(1, 1, m.variance));
        self.est = ekf_update(&self.est, &meas)?;
        Ok(())
    }

    pub fn update_encoder(&mut self, ticks: i64) -> Result<()> {
        if self.locked {
            return Ok(());
        }
        let meas = Measurement::select(
            2,
            &[GAMMA],
            &[crate::geometry::wrap_angle(ticks as f64 * self.tick)],
            DMatrix::from_element(1, 1, self.encoder_variance()),
        )
        .with_angular_rows(vec![0]);
        self.est = ekf_update(&self.est, &meas)?;
        Ok(())
    }

    pub fn predict(&mut self, dt: f64) -> Result<()> {
        if self.locked {
            if !(dt > 0.0) {
                return Err(crate::error::Error::NonPositiveStep(dt));
            }
            return Ok(());
        }
        self.est = ekf_predict(&self.est, &self.model, dt)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locked_filter_is_exact_zero() {
        let mut f = CameraFilter::locked();
        f.update_rate(&DifferentialImuMeasurement { rel_rate: 0.4, variance: 0.01 }).unwrap();
        f.update_encoder(17).unwrap();
        f.predict(0.1).unwrap();
        assert_eq!(f.estimate().mean[GAMMA], 0.0);
        assert_eq!(f.estimate().cov, DMatrix::zeros(2, 2));
    }

    #[test]
    fn encoder_pulls_angle() {
        let tick = 0.5f64.to_radians();
        let mut f = CameraFilter::new(0.0, [1.0, 1.0], tick, JointModel::default()).unwrap();
        f.update_encoder(100).unwrap();
        assert!((f.estimate().mean[GAMMA] - 100.0 * tick).abs() < 1e-4);
        assert!(f.estimate().variance(GAMMA) <= f.encoder_variance());
    }
}
