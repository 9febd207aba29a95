use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;

/// Mean and covariance. `angular` lists the state components that are
/// angles and get wrapped to `(-π, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEstimate {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub angular: Vec<usize>,
}

impl GaussianEstimate {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, angular: Vec<usize>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::InvalidParameter(format!(
                "covariance is {}x{} for a {n}-dimensional mean",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if angular.iter().any(|&i| i >= n) {
            return Err(Error::InvalidParameter("angular index out of range".into()));
        }
        let est = Self { mean, cov, angular };
        check_psd(&est.cov)?;
        Ok(est)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.cov[(i, i)]
    }

    fn wrap_angles(&mut self) {
        for &i in &self.angular {
            self.mean[i] = wrap_angle(self.mean[i]);
        }
    }
}

/// Checks symmetry and positive semi-definiteness by a Cholesky factorization
/// of the matrix plus a scale-relative jitter.
pub fn check_psd(cov: &DMatrix<f64>) -> Result<()> {
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPsd);
    }
    let n = cov.nrows();
    let scale = (0..n).map(|i| cov[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    for i in 0..n {
        if cov[(i, i)] < -1e-12 * scale {
            return Err(Error::NotPsd);
        }
        for j in 0..i {
            if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::NotPsd);
            }
        }
    }
    let jitter = DMatrix::<f64>::identity(n, n) * (1e-12 * scale);
    nalgebra::Cholesky::new(cov + jitter).map(|_| ()).ok_or(Error::NotPsd)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}

/// Process model used by [`ekf_predict`].
pub trait MotionModel {
    fn propagate(&self, x: &DVector<f64>, dt: f64) -> DVector<f64>;
    /// Jacobian of [`MotionModel::propagate`] with respect to the state.
    fn jacobian(&self, x: &DVector<f64>, dt: f64) -> DMatrix<f64>;
    fn process_noise(&self, x: &DVector<f64>, dt: f64) -> DMatrix<f64>;
}

pub fn ekf_predict<M: MotionModel + ?Sized>(est: &GaussianEstimate, model: &M, dt: f64) -> Result<GaussianEstimate> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    let f = model.jacobian(&est.mean, dt);
    let q = model.process_noise(&est.mean, dt);
    let mut out = GaussianEstimate {
        mean: model.propagate(&est.mean, dt),
        cov: &f * &est.cov * f.transpose() + q,
        angular: est.angular.clone(),
    };
    out.wrap_angles();
    symmetrize(&mut out.cov);
    check_psd(&out.cov)?;
    Ok(out)
}

/// Linear measurement `z = H x + v`, `v ~ N(0, R)`. Rows listed in
/// `angular_rows` have their residual wrapped.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub z: DVector<f64>,
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub angular_rows: Vec<usize>,
}

impl Measurement {
    /// Measurement of a subset of state components.
    pub fn select(state_dim: usize, indices: &[usize], z: &[f64], r: DMatrix<f64>) -> Self {
        let mut h = DMatrix::zeros(indices.len(), state_dim);
        for (row, &col) in indices.iter().enumerate() {
            h[(row, col)] = 1.0;
        }
        Self { z: DVector::from_column_slice(z), h, r, angular_rows: Vec::new() }
    }

    pub fn with_angular_rows(mut self, rows: Vec<usize>) -> Self {
        self.angular_rows = rows;
        self
    }
}

/// Kalman update with Joseph-form covariance.
pub fn ekf_update(est: &GaussianEstimate, meas: &Measurement) -> Result<GaussianEstimate> {
    update_with_gain_mask(est, meas, None)
}

/// Kalman update in which only the state components flagged in `mask` are
/// corrected. The Joseph form keeps the covariance valid for the restricted
/// gain.
pub(crate) fn update_with_gain_mask(
    est: &GaussianEstimate,
    meas: &Measurement,
    mask: Option<&[bool]>,
) -> Result<GaussianEstimate> {
    let n = est.dim();
    if meas.h.ncols() != n || meas.h.nrows() != meas.z.len() || meas.r.nrows() != meas.z.len() {
        return Err(Error::InvalidParameter("measurement dimensions do not match the state".into()));
    }
    check_psd(&meas.r)?;
    let mut resid = &meas.z - &meas.h * &est.mean;
    for &i in &meas.angular_rows {
        resid[i] = wrap_angle(resid[i]);
    }
    let pht = &est.cov * meas.h.transpose();
    let s = &meas.h * &pht + &meas.r;
    let s_inv = s.clone().cholesky().ok_or(Error::SingularInnovation)?.inverse();
    let mut k = pht * s_inv;
    if let Some(mask) = mask {
        for (i, &keep) in mask.iter().enumerate() {
            if !keep {
                k.row_mut(i).fill(0.0);
            }
        }
    }
    let mut mean = &est.mean + &k * resid;
    let ikh = DMatrix::<f64>::identity(n, n) - &k * &meas.h;
    let mut cov = &ikh * &est.cov * ikh.transpose() + &k * &meas.r * k.transpose();
    symmetrize(&mut cov);
    if let Some(mask) = mask {
        for (i, &keep) in mask.iter().enumerate() {
            if !keep {
                mean[i] = est.mean[i];
            }
        }
    }
    let mut out = GaussianEstimate { mean, cov, angular: est.angular.clone() };
    out.wrap_angles();
    check_psd(&out.cov)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Static {
        q: f64,
    }

    impl MotionModel for Static {
        fn propagate(&self, x: &DVector<f64>, _dt: f64) -> DVector<f64> {
            x.clone()
        }
        fn jacobian(&self, x: &DVector<f64>, _dt: f64) -> DMatrix<f64> {
            DMatrix::identity(x.len(), x.len())
        }
        fn process_noise(&self, x: &DVector<f64>, dt: f64) -> DMatrix<f64> {
            DMatrix::identity(x.len(), x.len()) * (self.q * dt)
        }
    }

    fn est2() -> GaussianEstimate {
        GaussianEstimate::new(
            DVector::from_vec(vec![1.0, -2.0]),
            DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn identity_model_without_noise_is_unchanged() {
        let e = est2();
        let p = ekf_predict(&e, &Static { q: 0.0 }, 0.5).unwrap();
        assert_eq!(p, e);
    }

    #[test]
    fn static_model_adds_q() {
        let e = est2();
        let p = ekf_predict(&e, &Static { q: 0.2 }, 1.0).unwrap();
        assert!((p.cov[(0, 0)] - 0.7).abs() < 1e-15);
        assert!((p.cov[(1, 1)] - 0.5).abs() < 1e-15);
        assert_eq!(p.cov[(0, 1)], 0.1);
        assert!(ekf_predict(&e, &Static { q: 0.2 }, 0.0).is_err());
    }

    #[test]
    fn equal_variance_fusion_halves() {
        let e = GaussianEstimate::new(DVector::from_vec(vec![3.0]), DMatrix::from_element(1, 1, 1.0), vec![]).unwrap();
        let m = Measurement::select(1, &[0], &[3.0], DMatrix::from_element(1, 1, 1.0));
        let u = ekf_update(&e, &m).unwrap();
        assert_eq!(u.mean[0], 3.0);
        assert!((u.cov[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn huge_measurement_noise_leaves_estimate() {
        let e = est2();
        let m = Measurement::select(2, &[0, 1], &[10.0, 10.0], DMatrix::identity(2, 2) * 1e12);
        let u = ekf_update(&e, &m).unwrap();
        assert!((u.mean - &e.mean).amax() < 1e-6);
        assert!((u.cov - &e.cov).amax() < 1e-6);
    }

    #[test]
    fn angular_residual_is_wrapped() {
        let e = GaussianEstimate::new(DVector::from_vec(vec![3.1]), DMatrix::from_element(1, 1, 1.0), vec![0]).unwrap();
        let m = Measurement::select(1, &[0], &[-3.1], DMatrix::from_element(1, 1, 1.0)).with_angular_rows(vec![0]);
        let u = ekf_update(&e, &m).unwrap();
        // residual is +0.0832, so the mean moves across +π
        let expected = crate::geometry::wrap_angle(3.1 + 0.5 * (2.0 * std::f64::consts::PI - 6.2));
        assert!((u.mean[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn singular_innovation_is_error() {
        let e = GaussianEstimate::new(DVector::from_vec(vec![0.0]), DMatrix::zeros(1, 1), vec![]).unwrap();
        let m = Measurement::select(1, &[0], &[1.0], DMatrix::zeros(1, 1));
        assert!(matches!(ekf_update(&e, &m), Err(Error::SingularInnovation)));
    }

    #[test]
    fn non_psd_rejected() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianEstimate::new(DVector::zeros(2), bad, vec![]).is_err());
    }
}
