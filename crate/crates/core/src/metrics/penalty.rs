use serde::{Deserialize, Serialize};

use super::constraints::ViolationFlags;

/// Per-step computation time in seconds.
pub type ComputeTime = f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComputeBands {
    pub budget: f64,
    /// Points when the per-episode average exceeds `budget`.
    pub average_points: f64,
    pub severe_max: f64,
    /// Points when the maximum exceeds `severe_max` (average within budget).
    pub severe_points: f64,
    /// Points when the maximum exceeds `budget` only.
    pub mild_points: f64,
}

impl Default for ComputeBands {
    fn default() -> Self {
        Self { budget: 0.02, average_points: 2.0, severe_max: 0.04, severe_points: 1.0, mild_points: 0.5 }
    }
}

impl ComputeBands {
    pub fn points(&self, times: &[ComputeTime]) -> f64 {
        if times.is_empty() {
            return 0.0;
        }
        let avg = times.iter().sum::<f64>() / times.len() as f64;
        let max = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if avg > self.budget {
            self.average_points
        } else if max > self.severe_max {
            self.severe_points
        } else if max > self.budget {
            self.mild_points
        } else {
            0.0
        }
    }
}

/// Link-height violations carry no weight of their own and are charged to the
/// end-effector group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyWeights {
    pub ee_position: f64,
    pub joint_position: f64,
    pub joint_velocity: f64,
    pub compute: ComputeBands,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self { ee_position: 3.0, joint_position: 2.0, joint_velocity: 1.0, compute: ComputeBands::default() }
    }
}

impl PenaltyWeights {
    /// Largest possible penalty for one episode.
    pub fn episode_max(&self) -> f64 {
        self.ee_position + self.joint_position + self.joint_velocity + self.compute.average_points
    }

    pub fn flag_points(&self, flags: &ViolationFlags) -> f64 {
        let mut pts = 0.0;
        if flags.ee || flags.link {
            pts += self.ee_position;
        }
        if flags.joint_pos {
            pts += self.joint_position;
        }
        if flags.joint_vel {
            pts += self.joint_velocity;
        }
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodePenalty {
    pub flags: ViolationFlags,
    pub constraint_points: f64,
    pub compute_points: f64,
}

impl EpisodePenalty {
    pub fn total(&self) -> f64 {
        self.constraint_points + self.compute_points
    }
}

/// Each violated group is charged once per episode regardless of how many
/// steps violate it.
pub fn accumulate_episode(flags: &[ViolationFlags], compute_times: &[ComputeTime], weights: &PenaltyWeights) -> EpisodePenalty {
    let union = flags.iter().fold(ViolationFlags::default(), |acc, f| acc.union(*f));
    EpisodePenalty {
        flags: union,
        constraint_points: weights.flag_points(&union),
        compute_points: weights.compute.points(compute_times),
    }
}

/// Running tally over episodes; `ds` is the deployability score.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PenaltyLedger {
    pub episodes: Vec<EpisodePenalty>,
    pub ds: f64,
}

impl PenaltyLedger {
    pub fn record(&mut self, episode: EpisodePenalty) {
        self.ds += episode.total();
        self.episodes.push(episode);
    }
}

/// Per-episode accumulator fed one control step at a time.
#[derive(Debug, Clone, Default)]
pub struct EpisodeMeter {
    flags: ViolationFlags,
    times: Vec<ComputeTime>,
    failed: bool,
}

impl EpisodeMeter {
    pub fn record_step(&mut self, flags: ViolationFlags, compute_time: Option<ComputeTime>) {
        self.flags = self.flags.union(flags);
        if let Some(t) = compute_time {
            self.times.push(t);
        }
    }

    /// An agent error charges the full episode maximum.
    pub fn mark_failed(&mut self) {
        self.failed = true;
    }

    pub fn finish(&self, weights: &PenaltyWeights) -> EpisodePenalty {
        if self.failed {
            let all = ViolationFlags { joint_pos: true, joint_vel: true, ee: true, link: true };
            return EpisodePenalty {
                flags: all,
                constraint_points: weights.flag_points(&all),
                compute_points: weights.compute.average_points,
            };
        }
        accumulate_episode(&[self.flags], &self.times, weights)
    }
}
