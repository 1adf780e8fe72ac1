//! Constant-velocity Kalman filter on the planar puck position.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KalmanError {
    #[error("covariance is not symmetric positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
    #[error("innovation covariance is singular")]
    Singular,
}

pub const PSD_TOLERANCE: f64 = 1e-10;

pub fn symmetrize(p: &Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

pub fn check_psd(p: &Matrix4<f64>) -> Result<(), KalmanError> {
    let asym = (p - p.transpose()).abs().max();
    let scale = p.abs().max().max(1.0);
    let min_eig = symmetrize(p).symmetric_eigenvalues().min();
    if asym > 1e-9 * scale || min_eig < -PSD_TOLERANCE * scale || !min_eig.is_finite() {
        return Err(KalmanError::NotPsd(min_eig));
    }
    Ok(())
}

/// State `(x, y, vx, vy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanState {
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
    /// White-acceleration spectral standard deviation (m/s²).
    pub accel_std: f64,
    /// Position measurement standard deviation (m).
    pub meas_std: f64,
}

impl KalmanState {
    pub fn new(position: Vector2<f64>, pos_var: f64, vel_var: f64, accel_std: f64, meas_std: f64) -> Self {
        Self {
            mean: Vector4::new(position.x, position.y, 0.0, 0.0),
            cov: Matrix4::from_diagonal(&Vector4::new(pos_var, pos_var, vel_var, vel_var)),
            accel_std,
            meas_std,
        }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.mean[0], self.mean[1])
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.mean[2], self.mean[3])
    }
}

pub fn transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

pub fn process_noise(dt: f64, accel_std: f64) -> Matrix4<f64> {
    let q = accel_std * accel_std;
    let (a, b, c) = (dt.powi(4) / 4.0 * q, dt.powi(3) / 2.0 * q, dt * dt * q);
    Matrix4::new(
        a, 0.0, b, 0.0, //
        0.0, a, 0.0, b, //
        b, 0.0, c, 0.0, //
        0.0, b, 0.0, c,
    )
}

fn observation() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

/// Predict over `dt`, then update with `z` when a measurement is available.
pub fn kalman_step(kf: &KalmanState, z: Option<Vector2<f64>>, dt: f64) -> Result<KalmanState, KalmanError> {
    if !(dt > 0.0) {
        return Err(KalmanError::BadStep(dt));
    }
    check_psd(&kf.cov)?;
    let f = transition(dt);
    let mut out = *kf;
    out.mean = f * kf.mean;
    out.cov = symmetrize(&(f * kf.cov * f.transpose() + process_noise(dt, kf.accel_std)));
    if let Some(z) = z {
        out = kalman_update(&out, z)?;
    }
    Ok(out)
}

/// Joseph-form position update.
pub fn kalman_update(kf: &KalmanState, z: Vector2<f64>) -> Result<KalmanState, KalmanError> {
    let h = observation();
    let r = Matrix2::identity() * (kf.meas_std * kf.meas_std);
    let s = h * kf.cov * h.transpose() + r;
    let s_inv = s.try_inverse().ok_or(KalmanError::Singular)?;
    let gain = kf.cov * h.transpose() * s_inv;
    let innovation = z - h * kf.mean;
    let i_kh = Matrix4::identity() - gain * h;
    let mut out = *kf;
    out.mean = kf.mean + gain * innovation;
    out.cov = symmetrize(&(i_kh * kf.cov * i_kh.transpose() + gain * r * gain.transpose()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn noiseless_measurements_pin_state() {
        let mut kf = KalmanState::new(Vector2::zeros(), 1e4, 1e4, 0.0, 1e-7);
        let truth = |t: f64| Vector2::new(0.2 + 1.5 * t, -0.1 + 0.4 * t);
        for k in 1..=2 {
            kf = kalman_step(&kf, Some(truth(k as f64 * 0.02)), 0.02).unwrap();
        }
        assert!((kf.position() - truth(0.04)).norm() < 1e-6);
        assert!((kf.velocity() - Vector2::new(1.5, 0.4)).norm() < 1e-4);
    }

    #[test]
    fn diffuse_prior_matches_line_fit_variance() {
        let sigma = 0.01;
        let mut kf = KalmanState::new(Vector2::zeros(), 1e8, 1e8, 0.0, sigma);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=50usize {
            kf = kalman_step(&kf, Some(Vector2::new(noise.sample(&mut rng), 0.0)), 0.02).unwrap();
            let var = kf.cov[(0, 0)];
            assert!(var < prev);
            prev = var;
            if n >= 2 {
                let nf = n as f64;
                let oracle = sigma * sigma * 2.0 * (2.0 * nf - 1.0) / (nf * (nf + 1.0));
                assert!((var - oracle).abs() < 1e-6 * oracle, "n={n} {var} vs {oracle}");
            }
        }
    }

    #[test]
    fn prediction_only_grows_uncertainty() {
        let mut kf = KalmanState::new(Vector2::new(0.5, 0.0), 1e-4, 1e-2, 1.0, 0.003);
        let mut trace = kf.cov.trace();
        for _ in 0..10 {
            kf = kalman_step(&kf, None, 0.02).unwrap();
            assert!(kf.cov.trace() > trace);
            trace = kf.cov.trace();
        }
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let mut kf = KalmanState::new(Vector2::zeros(), 1.0, 1.0, 1.0, 0.01);
        kf.cov[(0, 0)] = -1.0;
        assert!(matches!(kalman_step(&kf, None, 0.02), Err(KalmanError::NotPsd(_))));
    }
}
