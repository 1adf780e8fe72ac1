//! Evaluation environments: the ideal simulator, the full evaluation setup and
//! single-factor ablations.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::estimation::noise::{perturb_model, LossProcess, MismatchConfig, NoiseConfig};
use crate::metrics::{PenaltyWeights, SuccessCriteria};
use crate::sim::WorldConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    ModelMismatch,
    ObsNoise,
    PuckDisturbance,
    TrackLoss,
}

impl Factor {
    pub const ALL: [Factor; 4] = [Factor::ModelMismatch, Factor::ObsNoise, Factor::PuckDisturbance, Factor::TrackLoss];

    pub fn name(self) -> &'static str {
        match self {
            Factor::ModelMismatch => "model_mismatch",
            Factor::ObsNoise => "obs_noise",
            Factor::PuckDisturbance => "puck_disturbance",
            Factor::TrackLoss => "track_loss",
        }
    }
}

impl std::str::FromStr for Factor {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Factor::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| HarnessError::Config(format!("unknown factor `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Ideal,
    Evaluation,
    Ablation(Factor),
}

impl Profile {
    pub fn enabled(self) -> Vec<Factor> {
        match self {
            Profile::Ideal => Vec::new(),
            Profile::Evaluation => Factor::ALL.to_vec(),
            Profile::Ablation(f) => vec![f],
        }
    }
}

/// Scripted opponent used in the single-robot tasks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OpponentPattern {
    /// Hold the initial configuration.
    Hold,
    /// Sweep the mallet laterally at a fixed depth in the opponent's own frame.
    Sweep { x: f64, amplitude: f64, period_s: f64 },
}

impl Default for OpponentPattern {
    fn default() -> Self {
        OpponentPattern::Sweep { x: 0.35, amplitude: 0.3, period_s: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub profile: Profile,
    /// Nominal world; agents are built against this one.
    pub world: WorldConfig,
    /// Noise magnitudes used when observation noise is enabled.
    pub noise: NoiseConfig,
    /// Loss process used when tracking loss is enabled.
    pub loss: LossProcess,
    pub mismatch: MismatchConfig,
    /// Puck acceleration disturbance used when enabled (m/s²).
    pub disturbance_std: f64,
    pub opponent: OpponentPattern,
    pub success: SuccessCriteria,
    pub penalty: PenaltyWeights,
    pub episode_steps: usize,
    /// Measure agent compute time; off keeps runs bit-for-bit reproducible.
    pub timing: bool,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            profile: Profile::Ideal,
            world: WorldConfig::default(),
            noise: NoiseConfig { enabled: true, ..NoiseConfig::default() },
            loss: LossProcess { enabled: true, ..LossProcess::default() },
            mismatch: MismatchConfig::evaluation(),
            disturbance_std: 0.5,
            opponent: OpponentPattern::default(),
            success: SuccessCriteria::default(),
            penalty: PenaltyWeights::default(),
            episode_steps: 500,
            timing: true,
            seed: 0,
        }
    }
}

/// The concrete settings one run uses after applying the profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedEnv {
    pub world: WorldConfig,
    pub noise: NoiseConfig,
    pub mismatch: Option<MismatchConfig>,
}

impl ResolvedEnv {
    /// World actually simulated, with any model mismatch drawn from `rng`.
    pub fn simulated_world<R: Rng + ?Sized>(&self, rng: &mut R) -> WorldConfig {
        match &self.mismatch {
            Some(m) => perturb_model(&self.world, m, rng),
            None => self.world.clone(),
        }
    }
}

impl EnvConfig {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn evaluation() -> Self {
        Self { profile: Profile::Evaluation, ..Self::default() }
    }

    pub fn ablation(factor: Factor) -> Self {
        Self { profile: Profile::Ablation(factor), ..Self::default() }
    }

    pub fn with_profile(&self, profile: Profile) -> Self {
        Self { profile, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.world.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if !self.noise.is_valid() {
            return Err(HarnessError::Config("invalid noise settings".into()));
        }
        if !(self.disturbance_std >= 0.0) {
            return Err(HarnessError::Config(format!("disturbance_std must be non-negative, got {}", self.disturbance_std)));
        }
        if self.episode_steps == 0 {
            return Err(HarnessError::Config("episode_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn resolve(&self) -> ResolvedEnv {
        let on = self.profile.enabled();
        let mut world = self.world.clone();
        world.puck.disturbance_std = if on.contains(&Factor::PuckDisturbance) { self.disturbance_std } else { 0.0 };
        let mut noise = self.noise;
        noise.enabled = on.contains(&Factor::ObsNoise);
        noise.loss = LossProcess { enabled: on.contains(&Factor::TrackLoss), ..self.loss };
        let mismatch = on.contains(&Factor::ModelMismatch).then_some(self.mismatch);
        ResolvedEnv { world, noise, mismatch }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

fn factor_fields(factor: Factor) -> &'static [&'static str] {
    match factor {
        Factor::ModelMismatch => &["/mismatch"],
        Factor::ObsNoise => &["/noise/enabled"],
        Factor::PuckDisturbance => &["/world/puck/disturbance_std"],
        Factor::TrackLoss => &["/noise/loss/enabled"],
    }
}

fn blank(mut v: Value, pointer: &str) -> Value {
    if let Some(slot) = v.pointer_mut(pointer) {
        *slot = Value::Null;
    }
    v
}

/// Factors whose field groups differ between two resolved environments, or
/// an error if anything outside the factor groups differs.
pub fn changed_factors(a: &ResolvedEnv, b: &ResolvedEnv) -> Result<Vec<Factor>, HarnessError> {
    let (va, vb) = (serde_json::to_value(a)?, serde_json::to_value(b)?);
    let mut changed = Vec::new();
    let (mut rest_a, mut rest_b) = (va.clone(), vb.clone());
    for f in Factor::ALL {
        let differs = factor_fields(f).iter().any(|p| va.pointer(p) != vb.pointer(p));
        if differs {
            changed.push(f);
        }
        for p in factor_fields(f) {
            rest_a = blank(rest_a, p);
            rest_b = blank(rest_b, p);
        }
    }
    if rest_a != rest_b {
        return Err(HarnessError::Config("environments differ outside the ablation factor fields".into()));
    }
    Ok(changed)
}
