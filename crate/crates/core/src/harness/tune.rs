//! PGPE tuning of the rule-based hit controller against simulated episodes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::env::EnvConfig;
use super::episode::run_episode;
use super::seed::derive_seed;
use super::HarnessError;
use crate::learning::{pgpe_update, PgpeState, TraceRow};
use crate::metrics::Task;
use crate::policies::agents::Rl3Agent;
use crate::policies::{AgentContext, RuleControllerParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneConfig {
    pub iterations: usize,
    pub population: usize,
    /// Hit episodes averaged into each sample's return.
    pub episodes_per_sample: usize,
    /// Initial search spread relative to each parameter's magnitude.
    pub relative_sigma: f64,
    /// Return lost per penalty point.
    pub penalty_weight: f64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self { iterations: 10, population: 8, episodes_per_sample: 4, relative_sigma: 0.2, penalty_weight: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub hit_theta: [f64; 4],
    /// Batch best and mean return per iteration.
    pub trace: Vec<TraceRow>,
}

fn hit_return(env: &EnvConfig, ctx: &AgentContext, theta: &[f64], seeds: &[u64], penalty_weight: f64) -> f64 {
    let mut agent = Rl3Agent::new(ctx);
    agent.rule_params.hit_theta.copy_from_slice(theta);
    let total: f64 = seeds
        .iter()
        .map(|&seed| {
            let r = run_episode(Task::Hit, &mut agent, env, seed);
            f64::from(u8::from(r.success)) - penalty_weight * r.penalty.total()
        })
        .sum();
    total / seeds.len() as f64
}

/// Every sample of one iteration sees the same episode seeds, so returns
/// within a batch differ only through the parameters.
pub fn tune_rl3_hit(env: &EnvConfig, cfg: &TuneConfig) -> Result<TuneResult, HarnessError> {
    env.validate()?;
    if cfg.population < 2 || cfg.episodes_per_sample == 0 || !(cfg.relative_sigma > 0.0) {
        return Err(HarnessError::Config("tuning needs population >= 2, at least one episode and a positive sigma".into()));
    }
    let ctx = AgentContext::from_world(&env.world);
    let start = RuleControllerParams::default().hit_theta;
    let sigma = start.iter().map(|t| (cfg.relative_sigma * t.abs()).max(1e-3)).collect();
    let mut state = PgpeState::new(start.to_vec(), sigma).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(env.seed, &[201]));
    let mut trace = Vec::with_capacity(cfg.iterations);
    for iteration in 0..cfg.iterations {
        let seeds: Vec<u64> = (0..cfg.episodes_per_sample).map(|k| derive_seed(env.seed, &[200, iteration as u64, k as u64])).collect();
        let samples: Vec<Vec<f64>> = (0..cfg.population).map(|_| state.sample(&mut rng)).collect();
        let returns: Vec<f64> = samples.par_iter().map(|theta| hit_return(env, &ctx, theta, &seeds, cfg.penalty_weight)).collect();
        let best = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = returns.iter().sum::<f64>() / returns.len() as f64;
        trace.push(TraceRow { iteration, best, mean });
        state = pgpe_update(&state, &samples, &returns).map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    let mut hit_theta = [0.0; 4];
    hit_theta.copy_from_slice(&state.mu);
    Ok(TuneResult { hit_theta, trace })
}
