//! Easy, medium and hard initial-condition levels mixed by progress through
//! training. Each switch between neighbouring levels follows a logistic curve
//! rescaled to reach exactly 0 and 1 at the ends of its window.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LearningError;
use crate::policies::Rl3Task;
use crate::sim::PuckState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Easy,
    Medium,
    Hard,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Easy, Level::Medium, Level::Hard];
}

/// Puck start ranges in the agent's own frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRanges {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub vx: (f64, f64),
    pub vy: (f64, f64),
}

/// Progress window `[start, end]` in epochs over which one switch happens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchWindow {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumState {
    pub progress: f64,
    /// Easy to medium, then medium to hard.
    pub windows: [SwitchWindow; 2],
    /// Logistic slope times window length.
    pub steepness: f64,
    pub ranges: [LevelRanges; 3],
}

impl Default for CurriculumState {
    fn default() -> Self {
        Self {
            progress: 0.0,
            windows: [SwitchWindow { start: 3000.0, end: 4000.0 }, SwitchWindow { start: 6000.0, end: 7000.0 }],
            steepness: 10.0,
            ranges: [
                // Far end of the table, slow and nearly straight.
                LevelRanges { x: (1.6, 1.85), y: (-0.3, 0.3), vx: (-1.0, -0.5), vy: (-0.1, 0.1) },
                LevelRanges { x: (1.3, 1.6), y: (-0.35, 0.35), vx: (-1.8, -0.8), vy: (-0.5, 0.5) },
                // Mid-table start with fast, angled velocities.
                LevelRanges { x: (0.95, 1.15), y: (-0.4, 0.4), vx: (-2.5, -1.2), vy: (-1.0, 1.0) },
            ],
        }
    }
}

impl CurriculumState {
    fn switch(&self, w: &SwitchWindow) -> f64 {
        if self.progress <= w.start {
            return 0.0;
        }
        if self.progress >= w.end {
            return 1.0;
        }
        let logistic = |u: f64| 1.0 / (1.0 + (-u).exp());
        let k = self.steepness / (w.end - w.start);
        let mid = 0.5 * (w.start + w.end);
        let (lo, hi) = (logistic(-0.5 * self.steepness), logistic(0.5 * self.steepness));
        (logistic(k * (self.progress - mid)) - lo) / (hi - lo)
    }

    /// Probabilities of easy, medium and hard.
    pub fn weights(&self) -> [f64; 3] {
        let s1 = self.switch(&self.windows[0]);
        let s2 = self.switch(&self.windows[1]);
        [1.0 - s1, s1 * (1.0 - s2), s1 * s2]
    }

    pub fn advance(&mut self, epochs: f64) {
        self.progress += epochs;
    }

    pub fn ranges(&self, level: Level) -> &LevelRanges {
        &self.ranges[level as usize]
    }
}

/// Draw a level by weight, then a puck start from its ranges. Only the defend
/// and counter-attack tasks are trained with a curriculum.
pub fn curriculum_sample<R: Rng + ?Sized>(state: &CurriculumState, task: Rl3Task, rng: &mut R) -> Result<(Level, PuckState), LearningError> {
    if !matches!(task, Rl3Task::Defend | Rl3Task::CounterAttack) {
        return Err(LearningError::NoCurriculum(task));
    }
    let w = state.weights();
    let u: f64 = rng.random();
    let level = if u < w[0] {
        Level::Easy
    } else if u < w[0] + w[1] {
        Level::Medium
    } else {
        Level::Hard
    };
    let r = state.ranges(level);
    let mut draw = |(lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..hi) } else { lo };
    let puck = PuckState { x: draw(r.x), y: draw(r.y), vx: draw(r.vx), vy: draw(r.vy), ..PuckState::default() };
    Ok((level, puck))
}
