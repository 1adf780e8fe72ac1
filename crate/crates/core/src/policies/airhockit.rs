//! Composite-agent state machine: three skills plus a reset state with the
//! six transition conditions.
//!
//! Inputs are expressed in the robot-base frame, where the table centre sits
//! at `x_offset` (1.51 m for the default geometry).

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::PolicyError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AhConditionParams {
    /// Lateral margin on the puck position.
    pub m: f64,
    pub x_offset: f64,
}

impl Default for AhConditionParams {
    fn default() -> Self {
        // Half-width minus mallet radius of the default table.
        Self { m: 0.519 - 0.04815, x_offset: 1.51 }
    }
}

impl AhConditionParams {
    pub fn is_valid(&self) -> bool {
        self.m > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AhInputs {
    pub puck_pos: Vector2<f64>,
    pub puck_vel: Vector2<f64>,
    pub ee_x: f64,
}

impl AhInputs {
    /// Convert own-frame (own goal at x = 0) quantities, given the base x in that frame.
    pub fn from_own_frame(puck_pos: Vector2<f64>, puck_vel: Vector2<f64>, ee_x: f64, base_x: f64) -> Self {
        Self { puck_pos: Vector2::new(puck_pos.x - base_x, puck_pos.y), puck_vel, ee_x: ee_x - base_x }
    }
}

pub fn ah_condition(id: u8, obs: &AhInputs, params: &AhConditionParams) -> Result<bool, PolicyError> {
    let (px, py) = (obs.puck_pos.x, obs.puck_pos.y);
    let (vx, vy) = (obs.puck_vel.x, obs.puck_vel.y);
    let m = params.m;
    let dx = px - params.x_offset;
    let wide = py.abs() > m || (py + 0.75 * vy).abs() > m;
    let value = match id {
        1 => dx > -0.2 || dx + 0.5 * vx > -0.2 || px <= obs.ee_x || wide,
        2 => vx > -0.2 || px < obs.ee_x,
        3 => py.abs() < 0.41 || px > -0.2,
        4 => (dx < -0.2 && vx.abs().max(vy.abs()) < 0.05) && (dx <= -0.8 || py.abs() > m),
        5 => ((dx < 0.3 && vx < -0.5) || vx < -1.5) && obs.ee_x < px,
        6 => (dx < -0.2 && dx + vx < -0.2) && vx < 0.5 && vy.abs() < 0.5 && !wide && dx + 0.75 * vx > -0.8,
        other => return Err(PolicyError::UnknownCondition(other)),
    };
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AhState {
    Hit,
    Defend,
    Prepare,
    Ik,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Skill {
    Hit,
    Defend,
    Prepare,
    ResetToHome,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AhStateMachine {
    pub state: AhState,
    pub params: AhConditionParams,
}

impl AhStateMachine {
    pub fn new(params: AhConditionParams) -> Self {
        Self { state: AhState::Ik, params }
    }

    pub fn skill(&self) -> Skill {
        match self.state {
            AhState::Hit => Skill::Hit,
            AhState::Defend => Skill::Defend,
            AhState::Prepare => Skill::Prepare,
            AhState::Ik => Skill::ResetToHome,
        }
    }
}

/// Edges of the skill graph, as (from, to).
pub const AH_EDGES: [(AhState, AhState); 6] = [
    (AhState::Hit, AhState::Ik),
    (AhState::Defend, AhState::Ik),
    (AhState::Prepare, AhState::Ik),
    (AhState::Ik, AhState::Prepare),
    (AhState::Ik, AhState::Defend),
    (AhState::Ik, AhState::Hit),
];

/// One transition. Out of `ik`, defend (5) beats prepare (4) beats hit (6).
pub fn ah_step(sm: &AhStateMachine, obs: &AhInputs) -> (AhStateMachine, Skill) {
    let cond = |id| ah_condition(id, obs, &sm.params).expect("ids 1..=6 are defined");
    let state = match sm.state {
        AhState::Hit if cond(1) => AhState::Ik,
        AhState::Defend if cond(2) => AhState::Ik,
        AhState::Prepare if cond(3) => AhState::Ik,
        AhState::Ik if cond(5) => AhState::Defend,
        AhState::Ik if cond(4) => AhState::Prepare,
        AhState::Ik if cond(6) => AhState::Hit,
        s => s,
    };
    let next = AhStateMachine { state, ..*sm };
    (next, next.skill())
}
