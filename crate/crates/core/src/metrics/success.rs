use serde::{Deserialize, Serialize};

use crate::sim::{PuckState, TableGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Hit,
    Defend,
    Prepare,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Hit, Task::Defend, Task::Prepare];

    pub fn name(self) -> &'static str {
        match self {
            Task::Hit => "hit",
            Task::Defend => "defend",
            Task::Prepare => "prepare",
        }
    }
}

/// Axis-aligned rectangle in table-centred coordinates (x from the table
/// centre, positive toward the opponent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_abs_max: f64,
}

impl Region {
    pub fn contains(&self, x_centered: f64, y: f64) -> bool {
        self.x_min < x_centered && x_centered < self.x_max && y.abs() < self.y_abs_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuccessCriteria {
    /// Minimum puck speed when crossing the opponent goal line.
    pub hit_min_speed: f64,
    /// Maximum puck speed at the end of a defend episode.
    pub defend_max_speed: f64,
    pub prepare_region: Region,
    pub prepare_max_speed: f64,
}

impl Default for SuccessCriteria {
    fn default() -> Self {
        Self {
            hit_min_speed: 0.25,
            defend_max_speed: 0.1,
            prepare_region: Region { x_min: -0.65, x_max: -0.35, y_abs_max: 0.4 },
            prepare_max_speed: 0.1,
        }
    }
}

/// What the judge needs from one episode, in the agent's own frame.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeTrace {
    /// Puck state at the start and after every control step.
    pub puck: Vec<PuckState>,
    /// Index into `puck` of the first contact with the agent's mallet.
    pub first_contact: Option<usize>,
    /// Goal-line speed when the agent scored.
    pub scored: Option<f64>,
    pub conceded: bool,
}

pub fn judge_task(task: Task, trace: &EpisodeTrace, criteria: &SuccessCriteria, geom: &TableGeometry) -> bool {
    match task {
        Task::Hit => trace.scored.is_some_and(|speed| speed >= criteria.hit_min_speed),
        Task::Defend => {
            let Some(last) = trace.puck.last() else { return false };
            if trace.conceded || trace.scored.is_some() {
                return false;
            }
            let half = 0.5 * geom.length;
            let start = trace.first_contact.unwrap_or(trace.puck.len());
            let returned = trace.puck[start.min(trace.puck.len())..].iter().any(|p| p.x > half);
            !returned && last.x < half && last.speed() <= criteria.defend_max_speed
        }
        Task::Prepare => {
            let Some(last) = trace.puck.last() else { return false };
            !trace.conceded
                && criteria.prepare_region.contains(geom.centered_x(last.x), last.y)
                && last.speed() <= criteria.prepare_max_speed
        }
    }
}
