//! Phase-based rule controllers for hitting and preparing, and the
//! home-routed task state machine that sequences them.
//!
//! Angles are in degrees. `β` is the direction from the puck to the mallet,
//! measured from +x (toward the opponent) in `[0, 360)`.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RulePolicy {
    Hit,
    Prepare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Adjustment,
    Acceleration,
    /// Slow-down after the strike; hit policy only.
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleControllerParams {
    pub hit_theta: [f64; 4],
    pub prepare_theta: [f64; 3],
    pub dt: f64,
    pub mallet_radius: f64,
    pub puck_radius: f64,
    /// Constant radial step of the hit slow-down phase (m).
    pub slow_down_ds: f64,
    /// |correction| below which adjustment hands over to acceleration (deg).
    pub aligned_tolerance: f64,
    /// Steps spent in the final phase before completion.
    pub final_steps: u32,
}

impl Default for RuleControllerParams {
    fn default() -> Self {
        Self {
            hit_theta: [0.3, 2.0, 0.01, 0.6],
            prepare_theta: [0.5, 0.3, 0.02],
            dt: 0.02,
            mallet_radius: 0.04815,
            puck_radius: 0.03165,
            slow_down_ds: -0.01,
            aligned_tolerance: 5.0,
            final_steps: 15,
        }
    }
}

/// Correction angle of each policy for mallet direction `beta` (deg).
pub fn correction(policy: RulePolicy, beta: f64, puck_y: f64) -> f64 {
    match policy {
        // y measured from the table centre, so "below half the width" is y ≤ 0.
        RulePolicy::Hit if puck_y <= 0.0 => 180.0 - beta,
        RulePolicy::Hit => beta - 180.0,
        RulePolicy::Prepare if puck_y <= 0.0 => beta - 90.0,
        RulePolicy::Prepare => 270.0 - beta,
    }
}

/// Direction in which `dβ` is applied. The printed corrections change sign
/// with the puck side, so the rotation sense flips with it and every case
/// drives its correction toward zero.
pub fn rotation_sign(policy: RulePolicy, puck_y: f64) -> f64 {
    match (policy, puck_y <= 0.0) {
        (RulePolicy::Hit, true) | (RulePolicy::Prepare, false) => 1.0,
        (RulePolicy::Hit, false) | (RulePolicy::Prepare, true) => -1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleStep {
    pub target: Vector2<f64>,
    pub d_beta: f64,
    pub ds: f64,
    pub correction: f64,
    pub degenerate: bool,
}

/// Polar step `(dβ, ds)` about the puck for the active phase and the
/// resulting mallet target. The radial distance shrinks by `ds` but never
/// enters the puck disc.
#[allow(clippy::too_many_arguments)]
pub fn rl3_rule_step(
    policy: RulePolicy,
    phase: Phase,
    puck: &Vector2<f64>,
    ee: &Vector2<f64>,
    t_phase: u32,
    ds_prev: f64,
    params: &RuleControllerParams,
) -> RuleStep {
    let rel = ee - puck;
    let radius = rel.norm();
    if radius < 1e-9 {
        return RuleStep { target: *ee, d_beta: 0.0, ds: 0.0, correction: 0.0, degenerate: true };
    }
    let beta = rel.y.atan2(rel.x).to_degrees().rem_euclid(360.0);
    let corr = correction(policy, beta, puck.y);
    let t = t_phase as f64;
    let dt = params.dt;
    let (d_beta, ds) = match policy {
        RulePolicy::Hit => {
            let [th0, th1, th2, th3] = params.hit_theta;
            match phase {
                Phase::Adjustment => ((th0 + th1 * t * dt) * corr, th2),
                Phase::Acceleration => (corr / 2.0, (ds_prev + th3 * t * dt) / (radius + params.mallet_radius)),
                Phase::Final => ((th0 + th1 * dt) * corr, params.slow_down_ds),
            }
        }
        RulePolicy::Prepare => {
            let [th0, th1, th2] = params.prepare_theta;
            match phase {
                Phase::Adjustment => (th0 * t + th1 * corr, 5e-3),
                Phase::Acceleration | Phase::Final => (corr, th2),
            }
        }
    };
    let new_beta = (beta + rotation_sign(policy, puck.y) * d_beta).to_radians();
    let rho = (radius - ds).max(params.puck_radius);
    let target = puck + Vector2::new(new_beta.cos(), new_beta.sin()) * rho;
    RuleStep { target, d_beta, ds, correction: corr, degenerate: false }
}

/// Phase bookkeeping for one activation of a rule policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleController {
    pub policy: RulePolicy,
    pub phase: Phase,
    pub t_phase: u32,
    pub ds_prev: f64,
    pub done: bool,
}

impl RuleController {
    pub fn new(policy: RulePolicy) -> Self {
        Self { policy, phase: Phase::Adjustment, t_phase: 0, ds_prev: 0.0, done: false }
    }

    fn enter(&mut self, phase: Phase) {
        self.phase = phase;
        self.t_phase = 0;
    }

    /// Advance the phase clock and return the next mallet target.
    pub fn step(&mut self, puck: &Vector2<f64>, ee: &Vector2<f64>, params: &RuleControllerParams) -> RuleStep {
        let out = rl3_rule_step(self.policy, self.phase, puck, ee, self.t_phase, self.ds_prev, params);
        self.ds_prev = out.ds;
        self.t_phase += 1;
        let touching = (ee - puck).norm() <= params.mallet_radius + params.puck_radius + 0.005;
        match self.phase {
            Phase::Adjustment if out.correction.abs() < params.aligned_tolerance => self.enter(Phase::Acceleration),
            Phase::Acceleration if touching => match self.policy {
                RulePolicy::Hit => self.enter(Phase::Final),
                RulePolicy::Prepare => self.done = true,
            },
            Phase::Final if self.t_phase >= params.final_steps => self.done = true,
            _ => {}
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rl3Task {
    Home,
    Hit,
    Prepare,
    Defend,
    CounterAttack,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rl3Fsm {
    pub state: Rl3Task,
}

impl Default for Rl3Fsm {
    fn default() -> Self {
        Self { state: Rl3Task::Home }
    }
}

/// Puck quantities the switcher looks at, in the own frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitcherInputs {
    pub puck_pos: Vector2<f64>,
    pub puck_vel: Vector2<f64>,
    pub half_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwitcherParams {
    pub defend_vx: f64,
    pub slow_speed: f64,
    pub wall_band: f64,
    pub own_boundary_x: f64,
}

impl Default for SwitcherParams {
    fn default() -> Self {
        Self { defend_vx: -0.3, slow_speed: 0.3, wall_band: 0.41, own_boundary_x: 0.2 }
    }
}

/// Geometric task choice: defend an approaching puck, prepare a slow puck
/// stuck near a wall or the own end, otherwise hit. Returns home while the
/// puck is on the opponent half.
pub fn switcher(inputs: &SwitcherInputs, params: &SwitcherParams) -> Rl3Task {
    let (p, v) = (inputs.puck_pos, inputs.puck_vel);
    if v.x < params.defend_vx {
        return Rl3Task::Defend;
    }
    if p.x >= inputs.half_length {
        return Rl3Task::Home;
    }
    let slow = v.norm() < params.slow_speed;
    if slow && (p.y.abs() > params.wall_band || p.x < params.own_boundary_x) {
        Rl3Task::Prepare
    } else {
        Rl3Task::Hit
    }
}

/// Requests are only honoured from home; a completed task returns home.
pub fn rl3_fsm_step(fsm: &Rl3Fsm, request: Rl3Task, completed: bool) -> (Rl3Fsm, Rl3Task) {
    let state = match fsm.state {
        Rl3Task::Home => request,
        _ if completed => Rl3Task::Home,
        s => s,
    };
    (Rl3Fsm { state }, state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_beta(beta_deg: f64, puck: Vector2<f64>, r: f64) -> Vector2<f64> {
        let b = beta_deg.to_radians();
        puck + Vector2::new(b.cos(), b.sin()) * r
    }

    #[test]
    fn prepare_at_ninety_has_zero_correction() {
        let p = RuleControllerParams::default();
        let puck = Vector2::new(0.5, -0.2);
        let step = rl3_rule_step(RulePolicy::Prepare, Phase::Adjustment, &puck, &at_beta(90.0, puck, 0.15), 4, 0.0, &p);
        assert!(step.correction.abs() < 1e-9);
        assert!((step.d_beta - p.prepare_theta[0] * 4.0).abs() < 1e-9);
        assert_eq!(step.ds, 5e-3);
    }

    #[test]
    fn hit_adjustment_substitution() {
        let p = RuleControllerParams::default();
        let puck = Vector2::new(0.5, -0.1);
        let step = rl3_rule_step(RulePolicy::Hit, Phase::Adjustment, &puck, &at_beta(170.0, puck, 0.2), 3, 0.0, &p);
        assert!((step.correction - 10.0).abs() < 1e-9);
        let expect = (p.hit_theta[0] + p.hit_theta[1] * 3.0 * p.dt) * 10.0;
        assert!((step.d_beta - expect).abs() < 1e-9);
    }

    #[test]
    fn coincident_is_degenerate() {
        let p = RuleControllerParams::default();
        let x = Vector2::new(0.4, 0.0);
        let step = rl3_rule_step(RulePolicy::Hit, Phase::Acceleration, &x, &x, 0, 0.0, &p);
        assert!(step.degenerate);
        assert_eq!(step.target, x);
    }

    #[test]
    fn fsm_routes_through_home() {
        let fsm = Rl3Fsm { state: Rl3Task::Hit };
        let (same, task) = rl3_fsm_step(&fsm, Rl3Task::Prepare, false);
        assert_eq!((same.state, task), (Rl3Task::Hit, Rl3Task::Hit));
        let (home, _) = rl3_fsm_step(&fsm, Rl3Task::Prepare, true);
        assert_eq!(home.state, Rl3Task::Home);
        let (next, _) = rl3_fsm_step(&home, Rl3Task::Prepare, false);
        assert_eq!(next.state, Rl3Task::Prepare);
    }

    #[test]
    fn switcher_rules() {
        let p = SwitcherParams::default();
        let centre = SwitcherInputs { puck_pos: Vector2::new(0.5, 0.0), puck_vel: Vector2::zeros(), half_length: 0.974 };
        assert_eq!(switcher(&centre, &p), Rl3Task::Hit);
        let incoming = SwitcherInputs { puck_vel: Vector2::new(-1.0, 0.0), ..centre };
        assert_eq!(switcher(&incoming, &p), Rl3Task::Defend);
        let corner = SwitcherInputs { puck_pos: Vector2::new(0.5, 0.45), ..centre };
        assert_eq!(switcher(&corner, &p), Rl3Task::Prepare);
    }

    #[test]
    fn phases_only_advance() {
        let p = RuleControllerParams::default();
        let mut c = RuleController::new(RulePolicy::Hit);
        let puck = Vector2::new(0.5, 0.0);
        let mut ee = Vector2::new(0.2, 0.1);
        let mut last = c.phase;
        for _ in 0..200 {
            let s = c.step(&puck, &ee, &p);
            ee = s.target;
            assert!(c.phase >= last);
            last = c.phase;
            if c.done {
                break;
            }
        }
        assert!(c.done);
    }
}
