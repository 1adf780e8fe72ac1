//! Cross-entropy style sampler shared by the planners.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub population: usize,
    /// Initial standard deviation as a fraction of each bound's width.
    pub initial_std: f64,
    /// Per-iteration multiplier on the standard deviation.
    pub shrink: f64,
    /// Monte Carlo rollouts per candidate.
    pub rollouts: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { iterations: 8, population: 48, initial_std: 0.15, shrink: 0.5, rollouts: 1 }
    }
}

impl SamplerConfig {
    pub fn is_valid(&self) -> bool {
        self.population >= 2 && self.shrink > 0.0 && self.shrink < 1.0 && self.initial_std > 0.0 && self.rollouts >= 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult<const N: usize> {
    pub best: [f64; N],
    pub best_cost: f64,
    /// Every evaluated candidate in evaluation order.
    pub evaluated: Vec<([f64; N], f64)>,
}

/// Minimise `cost` over the box `bounds`. The first population is a Latin
/// hypercube over the box; later populations are Gaussian around the best point so far
/// with a shrinking spread. Non-finite costs are never selected.
pub fn sample_minimize<const N: usize, R, F>(
    bounds: [(f64, f64); N],
    cfg: &SamplerConfig,
    rng: &mut R,
    mut cost: F,
) -> Option<SampleResult<N>>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64; N]) -> f64,
{
    let mut evaluated = Vec::with_capacity(cfg.population * cfg.iterations.max(1));
    let mut best: Option<([f64; N], f64)> = None;
    let consider = |x: [f64; N], c: f64, best: &mut Option<([f64; N], f64)>| {
        if c.is_finite() && best.is_none_or(|(_, b)| c < b) {
            *best = Some((x, c));
        }
    };
    // Latin hypercube: every dimension gets one draw per stratum.
    let strata: [Vec<usize>; N] = std::array::from_fn(|_| {
        let mut order: Vec<usize> = (0..cfg.population).collect();
        order.shuffle(rng);
        order
    });
    for i in 0..cfg.population {
        let x = std::array::from_fn(|d| {
            let (lo, hi) = bounds[d];
            let u = (strata[d][i] as f64 + rng.random::<f64>()) / cfg.population as f64;
            lo + u * (hi - lo)
        });
        let c = cost(&x);
        consider(x, c, &mut best);
        evaluated.push((x, c));
    }
    let mut std: [f64; N] = std::array::from_fn(|d| cfg.initial_std * (bounds[d].1 - bounds[d].0));
    for _ in 1..cfg.iterations {
        let Some((centre, _)) = best else { break };
        for _ in 0..cfg.population {
            let x = std::array::from_fn(|d| {
                let z: f64 = rng.sample(StandardNormal);
                (centre[d] + std[d] * z).clamp(bounds[d].0, bounds[d].1)
            });
            let c = cost(&x);
            consider(x, c, &mut best);
            evaluated.push((x, c));
        }
        std.iter_mut().for_each(|s| *s *= cfg.shrink);
    }
    best.map(|(best, best_cost)| SampleResult { best, best_cost, evaluated })
}
