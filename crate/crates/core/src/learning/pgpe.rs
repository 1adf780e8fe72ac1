use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::LearningError;

/// Gaussian search distribution over controller parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgpeState {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub lr_mu: f64,
    pub lr_sigma: f64,
    pub sigma_min: f64,
    /// Mean return of the last batch.
    pub baseline: f64,
}

impl PgpeState {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self, LearningError> {
        if mu.len() != sigma.len() {
            return Err(LearningError::Dimension { expected: mu.len(), found: sigma.len() });
        }
        if sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(LearningError::NonPositiveSigma);
        }
        Ok(Self { mu, sigma, lr_mu: 0.2, lr_sigma: 0.1, sigma_min: 1e-3, baseline: 0.0 })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mu.iter().zip(&self.sigma).map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

/// One ascent step from a batch of sampled parameters and their returns.
///
/// Returns are centred on the batch mean and scaled by their standard
/// deviation, so shifting every return by a constant leaves the update
/// unchanged and equal returns leave the distribution where it is.
pub fn pgpe_update(state: &PgpeState, samples: &[Vec<f64>], returns: &[f64]) -> Result<PgpeState, LearningError> {
    if samples.len() < 2 || samples.len() != returns.len() {
        return Err(LearningError::TooFewSamples(samples.len().min(returns.len())));
    }
    let dim = state.mu.len();
    if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
        return Err(LearningError::Dimension { expected: dim, found: bad.len() });
    }
    let n = returns.len() as f64;
    let baseline = returns.iter().sum::<f64>() / n;
    let spread = (returns.iter().map(|r| (r - baseline).powi(2)).sum::<f64>() / n).sqrt();
    let mut next = state.clone();
    next.baseline = baseline;
    if spread == 0.0 {
        return Ok(next);
    }
    for i in 0..dim {
        let (mu, sigma) = (state.mu[i], state.sigma[i]);
        let mut grad_mu = 0.0;
        let mut grad_sigma = 0.0;
        for (theta, r) in samples.iter().zip(returns) {
            let adv = (r - baseline) / spread;
            let eps = theta[i] - mu;
            grad_mu += adv * eps;
            grad_sigma += adv * (eps * eps - sigma * sigma) / sigma;
        }
        next.mu[i] = mu + state.lr_mu * grad_mu / n;
        next.sigma[i] = (sigma + state.lr_sigma * grad_sigma / n).max(state.sigma_min);
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_returns_keep_mean() {
        let s = PgpeState::new(vec![1.0, -2.0], vec![0.5, 0.5]).unwrap();
        let next = pgpe_update(&s, &[vec![0.0, 0.0], vec![3.0, 1.0]], &[4.0, 4.0]).unwrap();
        assert_eq!(next.mu, s.mu);
    }

    #[test]
    fn single_sample_is_rejected() {
        let s = PgpeState::new(vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(pgpe_update(&s, &[vec![0.0]], &[1.0]), Err(LearningError::TooFewSamples(1))));
    }

    #[test]
    fn quadratic_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = PgpeState::new(vec![0.0], vec![1.0]).unwrap();
        for _ in 0..500 {
            let samples: Vec<Vec<f64>> = (0..20).map(|_| s.sample(&mut rng)).collect();
            let returns: Vec<f64> = samples.iter().map(|t| -(t[0] - 3.0).powi(2)).collect();
            s = pgpe_update(&s, &samples, &returns).unwrap();
        }
        assert!((s.mu[0] - 3.0).abs() < 0.1, "{:?}", s.mu);
    }
}
