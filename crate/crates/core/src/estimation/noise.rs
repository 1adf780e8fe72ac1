//! Observation corruption and model mismatch.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::sim::{ArmTrackingModel, Observation, TrackingMode, WorldConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossProcess {
    pub enabled: bool,
    /// Per-step probability of entering a loss window.
    pub entry_prob: f64,
    /// Mean window length in control steps; the exit probability is its inverse.
    pub mean_duration: f64,
}

impl Default for LossProcess {
    fn default() -> Self {
        Self { enabled: false, entry_prob: 0.01, mean_duration: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub puck_pos_std: f64,
    pub puck_angle_std: f64,
    pub puck_vel_std: f64,
    pub joint_pos_std: f64,
    pub joint_vel_std: f64,
    pub loss: LossProcess,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            puck_pos_std: 0.003,
            puck_angle_std: 0.01,
            puck_vel_std: 0.05,
            joint_pos_std: 0.0,
            joint_vel_std: 0.0,
            loss: LossProcess::default(),
        }
    }
}

impl NoiseConfig {
    pub fn off() -> Self {
        Self { enabled: false, loss: LossProcess { enabled: false, ..LossProcess::default() }, ..Self::default() }
    }

    pub fn is_valid(&self) -> bool {
        let stds = [self.puck_pos_std, self.puck_angle_std, self.puck_vel_std, self.joint_pos_std, self.joint_vel_std];
        stds.iter().all(|s| *s >= 0.0)
            && (0.0..=1.0).contains(&self.loss.entry_prob)
            && self.loss.mean_duration >= 1.0
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, std: f64) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        std * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Stateful corruptor for one agent's observation stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationCorruptor {
    pub cfg: NoiseConfig,
    lost: bool,
    forced: usize,
    frozen: Option<(f64, f64, f64)>,
    last_emitted: Option<(f64, f64, f64)>,
}

impl ObservationCorruptor {
    pub fn new(cfg: NoiseConfig) -> Self {
        Self { cfg, lost: false, forced: 0, frozen: None, last_emitted: None }
    }

    /// Start a loss window of exactly `steps` observations.
    pub fn force_loss(&mut self, steps: usize) {
        self.forced = steps;
    }

    pub fn in_loss(&self) -> bool {
        self.lost || self.forced > 0
    }

    fn advance_loss<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        if self.forced > 0 {
            self.forced -= 1;
            return true;
        }
        let loss = &self.cfg.loss;
        if !loss.enabled {
            self.lost = false;
            return false;
        }
        let p = if self.lost { 1.0 - 1.0 / loss.mean_duration } else { loss.entry_prob };
        self.lost = rng.random::<f64>() < p;
        self.lost
    }

    pub fn corrupt<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) -> Observation {
        let mut out = *obs;
        if self.cfg.enabled {
            out.puck.x += gaussian(rng, self.cfg.puck_pos_std);
            out.puck.y += gaussian(rng, self.cfg.puck_pos_std);
            out.puck.theta += gaussian(rng, self.cfg.puck_angle_std);
            out.puck.vx += gaussian(rng, self.cfg.puck_vel_std);
            out.puck.vy += gaussian(rng, self.cfg.puck_vel_std);
            for j in 0..out.q.len() {
                out.q[j] += gaussian(rng, self.cfg.joint_pos_std);
                out.qdot[j] += gaussian(rng, self.cfg.joint_vel_std);
            }
        }
        if self.advance_loss(rng) {
            let frozen = *self.frozen.get_or_insert(self.last_emitted.unwrap_or((out.puck.x, out.puck.y, out.puck.theta)));
            (out.puck.x, out.puck.y, out.puck.theta) = frozen;
            out.puck.vx = 0.0;
            out.puck.vy = 0.0;
            out.puck.omega = 0.0;
        } else {
            self.frozen = None;
        }
        self.last_emitted = Some((out.puck.x, out.puck.y, out.puck.theta));
        out
    }
}

pub fn corrupt_observation<R: Rng + ?Sized>(obs: &Observation, corruptor: &mut ObservationCorruptor, rng: &mut R) -> Observation {
    corruptor.corrupt(obs, rng)
}

/// Arm and puck parameter changes applied to an evaluation world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MismatchConfig {
    /// Replace ideal tracking with a lag of this time constant and gain.
    pub arm: Option<ArmTrackingModel>,
    pub friction_scale: f64,
    pub restitution_scale: f64,
    /// Relative standard deviation of a per-world random jitter on every scaled value.
    pub jitter: f64,
}

impl Default for MismatchConfig {
    fn default() -> Self {
        Self { arm: None, friction_scale: 1.0, restitution_scale: 1.0, jitter: 0.0 }
    }
}

impl MismatchConfig {
    /// Mismatch used by the evaluation and ablation profiles.
    pub fn evaluation() -> Self {
        Self {
            arm: Some(ArmTrackingModel { mode: TrackingMode::FirstOrderLag, tau: 0.015, gain_scale: 0.95 }),
            friction_scale: 1.5,
            restitution_scale: 0.95,
            jitter: 0.1,
        }
    }
}

pub fn perturb_model<R: Rng + ?Sized>(world: &WorldConfig, cfg: &MismatchConfig, rng: &mut R) -> WorldConfig {
    let jitter = Normal::new(0.0, cfg.jitter.max(0.0)).expect("finite jitter");
    let mut draw = |scale: f64| if cfg.jitter > 0.0 { scale * (1.0 + jitter.sample(rng)).max(0.1) } else { scale };
    let mut out = world.clone();
    if let Some(arm) = cfg.arm {
        for slot in out.arms.iter_mut() {
            *slot = ArmTrackingModel { mode: arm.mode, tau: draw(arm.tau), gain_scale: draw(arm.gain_scale) };
        }
    }
    out.puck.slide_friction = world.puck.slide_friction * draw(cfg.friction_scale);
    out.puck.wall_restitution = (world.puck.wall_restitution * draw(cfg.restitution_scale)).clamp(0.05, 1.0);
    out.puck.mallet_restitution = (world.puck.mallet_restitution * draw(cfg.restitution_scale)).clamp(0.05, 1.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{PuckState, Side, World};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs() -> Observation {
        let w = World::new(WorldConfig::default(), PuckState { x: 0.8, y: 0.1, vx: 0.5, ..Default::default() }, 0).unwrap();
        w.observe(Side::Home)
    }

    #[test]
    fn disabled_noise_is_identity() {
        let mut c = ObservationCorruptor::new(NoiseConfig::off());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(c.corrupt(&obs(), &mut rng), obs());
    }

    #[test]
    fn forced_loss_freezes_position() {
        let cfg = NoiseConfig { enabled: true, ..NoiseConfig::default() };
        let mut c = ObservationCorruptor::new(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        c.corrupt(&obs(), &mut rng);
        c.force_loss(10);
        let window: Vec<_> = (0..10).map(|_| c.corrupt(&obs(), &mut rng)).collect();
        assert!(window.iter().all(|o| o.puck.x == window[0].puck.x && o.puck.y == window[0].puck.y));
        assert!(window.iter().all(|o| o.puck.vx == 0.0 && o.puck.vy == 0.0));
        let after = c.corrupt(&obs(), &mut rng);
        assert_ne!(after.puck.x, window[0].puck.x);
    }

    #[test]
    fn empirical_std_matches() {
        let cfg = NoiseConfig { enabled: true, puck_pos_std: 0.003, ..NoiseConfig::default() };
        let mut c = ObservationCorruptor::new(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base = obs();
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| c.corrupt(&base, &mut rng).puck.x - base.puck.x).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() - 0.003).abs() < 0.05 * 0.003);
    }

    #[test]
    fn markov_loss_has_expected_duration() {
        let cfg = NoiseConfig { enabled: false, loss: LossProcess { enabled: true, entry_prob: 0.05, mean_duration: 8.0 }, ..NoiseConfig::default() };
        let mut c = ObservationCorruptor::new(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut windows, mut lost_steps, mut prev) = (0usize, 0usize, false);
        for _ in 0..200_000 {
            c.corrupt(&obs(), &mut rng);
            let now = c.in_loss();
            if now && !prev {
                windows += 1;
            }
            lost_steps += now as usize;
            prev = now;
        }
        let mean = lost_steps as f64 / windows as f64;
        assert!((mean - 8.0).abs() < 0.5, "{mean}");
    }

    #[test]
    fn identity_mismatch_and_determinism() {
        let base = WorldConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(perturb_model(&base, &MismatchConfig::default(), &mut rng), base);
        let a = perturb_model(&base, &MismatchConfig::evaluation(), &mut ChaCha8Rng::seed_from_u64(9));
        let b = perturb_model(&base, &MismatchConfig::evaluation(), &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert_eq!(a.arms[0].mode, TrackingMode::FirstOrderLag);
    }
}
