//! Separable (diagonal-covariance) CMA evolution strategy.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlackboxConfig {
    pub initial_sigma: f64,
    /// Offspring per generation; `None` uses `4 + 3 ln n`.
    pub population: Option<usize>,
    /// Box constraints; candidates are projected before evaluation.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for BlackboxConfig {
    fn default() -> Self {
        Self { initial_sigma: 0.3, population: None, bounds: None }
    }
}

/// One row per generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlackboxResult {
    pub x: Vec<f64>,
    /// Objective at `x`; `None` when nothing was evaluated.
    pub value: Option<f64>,
    pub evaluations: usize,
    pub trace: Vec<TraceRow>,
}

fn project(x: &mut [f64], bounds: Option<&Vec<(f64, f64)>>) {
    if let Some(b) = bounds {
        for (xi, (lo, hi)) in x.iter_mut().zip(b) {
            *xi = xi.clamp(*lo, *hi);
        }
    }
}

/// Minimize `objective` from `x0` with at most `budget` evaluations and return
/// the best point evaluated.
pub fn blackbox_fit<F, R>(mut objective: F, x0: &[f64], budget: usize, cfg: &BlackboxConfig, rng: &mut R) -> BlackboxResult
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let n = x0.len();
    let mut start = x0.to_vec();
    project(&mut start, cfg.bounds.as_ref());
    if budget == 0 || n == 0 {
        return BlackboxResult { x: x0.to_vec(), value: None, evaluations: 0, trace: Vec::new() };
    }
    let nf = n as f64;
    let lambda = cfg.population.unwrap_or(4 + (3.0 * nf.ln()).floor() as usize).max(2);
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu).map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - ((i + 1) as f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
    // Separable variant: learning rates scaled up by (n + 2) / 3.
    let sep = (nf + 2.0) / 3.0;
    let c1 = (sep * 2.0 / ((nf + 1.3).powi(2) + mu_eff)).min(1.0);
    let c_mu = (sep * 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff)).min(1.0 - c1);
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut best_x = start.clone();
    let mut best = objective(&start);
    let mut evaluations = 1;
    let mut mean = start;
    let mut sigma = cfg.initial_sigma;
    let mut diag = vec![1.0f64; n];
    let mut p_sigma = vec![0.0f64; n];
    let mut p_c = vec![0.0f64; n];
    let mut trace = Vec::new();
    let mut iteration = 0;

    while evaluations + lambda <= budget {
        let mut offspring: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let mut x: Vec<f64> = (0..n).map(|i| mean[i] + sigma * diag[i].sqrt() * z[i]).collect();
            project(&mut x, cfg.bounds.as_ref());
            let f = objective(&x);
            offspring.push((if f.is_nan() { f64::INFINITY } else { f }, x, z));
        }
        evaluations += lambda;
        offspring.sort_by(|a, b| a.0.total_cmp(&b.0));
        if offspring[0].0 < best {
            best = offspring[0].0;
            best_x = offspring[0].1.clone();
        }
        let finite: Vec<f64> = offspring.iter().map(|o| o.0).filter(|f| f.is_finite()).collect();
        let gen_mean = if finite.is_empty() { f64::INFINITY } else { finite.iter().sum::<f64>() / finite.len() as f64 };
        trace.push(TraceRow { iteration, best, mean: gen_mean });
        iteration += 1;

        // Steps are taken from the projected points so the mean stays feasible.
        let old_mean = mean.clone();
        for i in 0..n {
            mean[i] = (0..mu).map(|k| weights[k] * offspring[k].1[i]).sum();
        }
        let y_w: Vec<f64> = (0..n).map(|i| (mean[i] - old_mean[i]) / sigma).collect();
        for i in 0..n {
            p_sigma[i] = (1.0 - c_sigma) * p_sigma[i] + (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt() * y_w[i] / diag[i].sqrt();
        }
        let ps_norm = p_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        let h_sigma = ps_norm / (1.0 - (1.0 - c_sigma).powi(2 * (iteration as i32))).sqrt() / chi_n < 1.4 + 2.0 / (nf + 1.0);
        let h = if h_sigma { 1.0 } else { 0.0 };
        for i in 0..n {
            p_c[i] = (1.0 - c_c) * p_c[i] + h * (c_c * (2.0 - c_c) * mu_eff).sqrt() * y_w[i];
            let rank_mu: f64 = (0..mu)
                .map(|k| {
                    let y = (offspring[k].1[i] - old_mean[i]) / sigma;
                    weights[k] * y * y
                })
                .sum();
            diag[i] = ((1.0 - c1 - c_mu) * diag[i] + c1 * (p_c[i] * p_c[i] + (1.0 - h) * c_c * (2.0 - c_c) * diag[i]) + c_mu * rank_mu).max(1e-300);
        }
        sigma *= ((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0)).exp();
        if !sigma.is_finite() || sigma < 1e-300 {
            break;
        }
    }
    BlackboxResult { x: best_x, value: Some(best), evaluations, trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn zero_budget_returns_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = blackbox_fit(sphere, &[1.0, 2.0], 0, &BlackboxConfig::default(), &mut rng);
        assert_eq!(r.x, vec![1.0, 2.0]);
        assert_eq!(r.evaluations, 0);
    }

    #[test]
    fn sphere_four_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = blackbox_fit(sphere, &[1.0, -1.0, 0.5, 2.0], 2000, &BlackboxConfig { initial_sigma: 0.5, ..Default::default() }, &mut rng);
        assert!(sphere(&r.x).sqrt() < 1e-2, "{r:?}");
        assert!(r.evaluations <= 2000);
    }

    #[test]
    fn trace_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = blackbox_fit(sphere, &[3.0, 3.0], 400, &BlackboxConfig::default(), &mut rng);
        assert!(r.trace.windows(2).all(|w| w[1].best <= w[0].best));
    }

    #[test]
    fn bounds_are_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = BlackboxConfig { bounds: Some(vec![(1.0, 2.0)]), ..Default::default() };
        let r = blackbox_fit(|x| x[0] * x[0], &[1.5], 200, &cfg, &mut rng);
        assert!((r.x[0] - 1.0).abs() < 1e-9);
    }
}
