//! Reward functions of the three learning-based teams.
//!
//! Positions passed to the composite-agent rewards are table-centred (x from
//! the table centre, positive toward the opponent).

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::LearningError;
use crate::policies::Strategy;

/// Kinematic snapshot read by the rewards.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepObservation {
    pub puck_pos: Vector2<f64>,
    pub puck_vel: Vector2<f64>,
    pub ee_pos: Vector2<f64>,
    pub ee_vel: Vector2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventFlags {
    /// Mallet touched the puck during this step.
    pub hit: bool,
    /// First touch of the episode.
    pub first_touch: bool,
    pub goal: bool,
    pub conceded: bool,
    pub fault: bool,
    pub episode_end: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FlagError {
    #[error("a goal or a conceded goal must end the episode")]
    GoalWithoutEnd,
    #[error("a first touch must also be a touch")]
    FirstTouchWithoutHit,
}

impl EventFlags {
    pub fn check(&self) -> Result<(), FlagError> {
        if (self.goal || self.conceded) && !self.episode_end {
            return Err(FlagError::GoalWithoutEnd);
        }
        if self.first_touch && !self.hit {
            return Err(FlagError::FirstTouchWithoutHit);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub obs: StepObservation,
    pub action: Vec<f64>,
    pub next: StepObservation,
    pub flags: EventFlags,
    pub t: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AhRewardTask {
    Hit,
    DefendSlow,
    DefendFast,
    PrepareClose,
    PrepareFar,
}

impl std::str::FromStr for AhRewardTask {
    type Err = LearningError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hit" => Ok(Self::Hit),
            "defend_slow" => Ok(Self::DefendSlow),
            "defend_fast" => Ok(Self::DefendFast),
            "prepare_close" => Ok(Self::PrepareClose),
            "prepare_far" => Ok(Self::PrepareFar),
            other => Err(LearningError::UnknownTask(other.to_string())),
        }
    }
}

fn unit(v: Vector2<f64>) -> Vector2<f64> {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        Vector2::zeros()
    }
}

/// Reward for moving the mallet toward a slow puck on the own half.
fn approach_term(o: &StepObservation) -> Option<f64> {
    (o.puck_vel.norm() < 0.25 && o.puck_pos.x < 0.0).then(|| unit(o.puck_pos - o.ee_pos).dot(&o.ee_vel).max(0.0))
}

/// Evaluated on the post-transition state. Cases are checked from the most
/// specific event downward; a goal wins over a touch in the same step.
pub fn reward_airhockit(task: AhRewardTask, tr: &TransitionRecord) -> f64 {
    let o = &tr.next;
    let speed = o.puck_vel.norm();
    match task {
        AhRewardTask::Hit => {
            if tr.flags.goal {
                2000.0 + 5000.0 * speed
            } else if tr.flags.hit {
                10.0 * speed
            } else {
                approach_term(o).unwrap_or(0.0)
            }
        }
        AhRewardTask::DefendSlow => {
            let mut r = if tr.flags.first_touch && o.puck_vel.x > -0.2 { 30.0 + 100f64.powf(1.0 - 0.25 * speed) } else { 0.01 };
            let parked = speed < 0.1 && -0.7 < o.puck_pos.x && o.puck_pos.x < -0.2;
            if parked && tr.t == tr.horizon {
                r += 70.0;
            }
            r
        }
        AhRewardTask::DefendFast => {
            if tr.flags.conceded {
                -100.0
            } else {
                0.0
            }
        }
        AhRewardTask::PrepareClose => {
            let proximity = approach_term(o).unwrap_or(0.0);
            let p = o.puck_pos;
            let bonus = if speed < 0.5 && -0.65 < p.x && p.x < -0.35 && -0.4 < p.y && p.y < 0.4 { 2000.0 } else { 0.0 };
            let toward = unit(Vector2::new(-0.5, 0.0) - p).dot(&o.puck_vel);
            proximity + bonus + 10.0 * toward.clamp(0.0, 0.5)
        }
        AhRewardTask::PrepareFar => {
            if let Some(r) = approach_term(o) {
                r
            } else if o.puck_pos.x > 0.2 {
                3000.0
            } else {
                10.0 * speed
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameEvent {
    Score,
    Concede,
    OwnFault,
    None,
}

pub fn reward_spacer(event: GameEvent, strategy: Strategy) -> f64 {
    match (event, strategy) {
        (GameEvent::Score, Strategy::Balanced) => 2.0 / 3.0,
        (GameEvent::Score, Strategy::Aggressive) => 1.0,
        (GameEvent::Score, Strategy::Defensive) => 0.0,
        (GameEvent::Concede, _) => -1.0,
        (GameEvent::OwnFault, _) => -1.0 / 3.0,
        (GameEvent::None, _) => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TriangleRewardParams {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub table_diag: f64,
    pub max_vel: f64,
}

impl Default for TriangleRewardParams {
    fn default() -> Self {
        Self { a: 100.0, b: 10.0, gamma: 0.99, table_diag: (1.948f64.powi(2) + 1.038f64.powi(2)).sqrt(), max_vel: 3.0 }
    }
}

impl TriangleRewardParams {
    pub fn is_valid(&self) -> bool {
        self.gamma > 0.0 && self.gamma < 1.0 && self.table_diag > 0.0 && self.max_vel > 0.0
    }
}

/// Triangle spanned by the puck at hit time and the two opponent goal posts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotTriangle {
    pub apex: Vector2<f64>,
    pub post_left: Vector2<f64>,
    pub post_right: Vector2<f64>,
}

impl ShotTriangle {
    /// Goal line at `goal_x` with half-width `half_goal`.
    pub fn new(apex: Vector2<f64>, goal_x: f64, half_goal: f64) -> Self {
        Self { apex, post_left: Vector2::new(goal_x, half_goal), post_right: Vector2::new(goal_x, -half_goal) }
    }

    fn is_degenerate(&self) -> bool {
        let (u, v) = (self.post_left - self.apex, self.post_right - self.apex);
        (u.x * v.y - u.y * v.x).abs() < 1e-12
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        if self.is_degenerate() {
            return true;
        }
        let cross = |a: Vector2<f64>, b: Vector2<f64>, c: &Vector2<f64>| (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        let d1 = cross(self.apex, self.post_left, p);
        let d2 = cross(self.post_left, self.post_right, p);
        let d3 = cross(self.post_right, self.apex, p);
        let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
        let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
        !(neg && pos)
    }

    /// Angle (rad) from the apex between `p` and the nearer side of the
    /// triangle; zero inside the wedge.
    pub fn diff_angle(&self, p: &Vector2<f64>) -> f64 {
        let dir = |q: Vector2<f64>| (q.y - self.apex.y).atan2(q.x - self.apex.x);
        let (a_left, a_right, a_p) = (dir(self.post_left), dir(self.post_right), dir(*p));
        let (lo, hi) = (a_left.min(a_right), a_left.max(a_right));
        if a_p < lo {
            lo - a_p
        } else if a_p > hi {
            a_p - hi
        } else {
            0.0
        }
    }
}

/// Hit reward of the rule-based controllers. `triangle` is `None` until the
/// first hit; the hit step itself pays the instantaneous hit reward.
pub fn reward_rl3_hit(tr: &TransitionRecord, params: &TriangleRewardParams, triangle: Option<&ShotTriangle>) -> f64 {
    let o = &tr.next;
    if tr.flags.goal {
        return 1.0 / (1.0 - params.gamma);
    }
    if tr.flags.hit && triangle.is_none() {
        let alpha = o.ee_vel.y.atan2(o.ee_vel.x);
        let shape = 1.0 - (2.0 * alpha / std::f64::consts::PI).powi(2);
        return params.a + params.b * shape * o.ee_vel.norm() / params.max_vel;
    }
    match triangle {
        None => -(o.ee_pos - o.puck_pos).norm() / (0.5 * params.table_diag),
        Some(tri) if tri.contains(&o.puck_pos) => params.b + o.puck_vel.norm(),
        Some(tri) => -tri.diff_angle(&o.puck_pos),
    }
}
