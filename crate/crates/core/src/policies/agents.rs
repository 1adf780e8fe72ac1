//! Playable agents behind one interface.
//!
//! - `hold`: keeps the arm at its initial configuration.
//! - `spacer`: task-space chase-and-block heuristic with score-based strategy
//!   switching. The heuristic stands in for a trained policy.
//! - `composite`: the six-condition state machine choosing between planned
//!   strikes, planned deflections, preparation pushes and a reset to home.
//! - `rl3`: phase-based rule controllers sequenced by the switcher and the
//!   home-routed task machine.

use nalgebra::{Matrix4, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::airhockit::{ah_step, AhConditionParams, AhInputs, AhStateMachine, Skill};
use super::ensemble::{ensemble_select, EnsembleMargins, Strategy};
use super::rl3::{rl3_fsm_step, switcher, RuleController, RuleControllerParams, RulePolicy, Rl3Fsm, Rl3Task, SwitcherInputs, SwitcherParams};
use super::task_action::{track_target, ActionWorkspace};
use crate::estimation::kalman::{kalman_step, KalmanState};
use crate::estimation::piecewise::{EkfBelief, PiecewiseLinearPuckModel, PuckVector};
use crate::kinematics::{forward_kinematics, IkOptions, JointVector, RobotSpec};
use crate::planning::deflection::{plan_deflection, ContactIntent, ContactPlan, DeflectionContext, ReachBand};
use crate::planning::sampler::SamplerConfig;
use crate::planning::shot::{plan_shot, predict_belief, ShotContext, ShotCostWeights};
use crate::planning::trajectory::{hermite, plan_mallet_trajectory, TrajectoryParams};
use crate::sim::interpolation::CONTROL_DT;
use crate::sim::{Command, MalletState, Observation, PuckParams, TableGeometry, WorldConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("unknown agent `{0}` (expected one of {AGENT_NAMES:?})")]
    Unknown(String),
    #[error("agent failed: {0}")]
    Failed(String),
}

/// Horizontal mallet distance from the robot base beyond which stretched
/// postures bring the wrist close to the link height limit (m).
pub const MAX_REACH: f64 = 1.40;

pub const AGENT_NAMES: [&str; 4] = ["hold", "spacer", "composite", "rl3"];

/// What an agent knows about its own robot and the table.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentContext {
    pub robot: RobotSpec,
    pub table: TableGeometry,
    /// Nominal puck parameters used for prediction.
    pub puck: PuckParams,
}

impl AgentContext {
    pub fn from_world(cfg: &WorldConfig) -> Self {
        Self { robot: cfg.robot.clone(), table: cfg.table, puck: PuckParams { disturbance_std: 0.0, ..cfg.puck } }
    }

    pub fn home_ee(&self) -> Vector2<f64> {
        let ee = forward_kinematics(&self.robot, &self.robot.q_init).ee;
        Vector2::new(ee.x, ee.y)
    }

    pub fn ee(&self, q: &JointVector) -> Vector2<f64> {
        let ee = forward_kinematics(&self.robot, q).ee;
        Vector2::new(ee.x, ee.y)
    }

    /// Clamp a mallet target into the workspace with a safety margin, and
    /// pull it inside the reach where the wrist stays clear of the table.
    pub fn safe_target(&self, p: &Vector2<f64>) -> Vector2<f64> {
        let margin = 0.02;
        let ws = ActionWorkspace::from_geometry(&self.table);
        let clamped = Vector2::new(
            p.x.clamp(ws.x_min + margin, ws.x_max - margin),
            p.y.clamp(ws.y_min + margin, ws.y_max - margin),
        );
        let base = Vector2::new(self.robot.base.translation[0], self.robot.base.translation[1]);
        let arm = clamped - base;
        if arm.norm() > MAX_REACH {
            base + arm * (MAX_REACH / arm.norm())
        } else {
            clamped
        }
    }

    fn command_toward(&self, target: &Vector2<f64>, q: &JointVector, opts: &IkOptions) -> Command {
        track_target(&self.safe_target(target), q, &self.robot, &self.table, opts).command
    }
}

pub trait Agent: Send {
    fn name(&self) -> &str;
    /// Clear episode state before a new episode or game.
    fn reset(&mut self);
    fn act(&mut self, obs: &Observation) -> Result<Command, AgentError>;
}

pub fn make_agent(name: &str, ctx: &AgentContext, seed: u64) -> Result<Box<dyn Agent>, AgentError> {
    match name {
        "hold" => Ok(Box::new(HoldAgent::new(ctx))),
        "spacer" => Ok(Box::new(SpacerAgent::new(ctx))),
        "composite" => Ok(Box::new(CompositeAgent::new(ctx, seed))),
        "rl3" => Ok(Box::new(Rl3Agent::new(ctx))),
        other => Err(AgentError::Unknown(other.to_string())),
    }
}

/// Constant-velocity Kalman tracking of the observed puck. Observations that
/// repeat the previous position with zero velocity are treated as lost.
#[derive(Debug, Clone, PartialEq)]
pub struct PuckTracker {
    kf: Option<KalmanState>,
    last: Option<Vector2<f64>>,
    pub accel_std: f64,
    pub meas_std: f64,
}

impl Default for PuckTracker {
    fn default() -> Self {
        Self { kf: None, last: None, accel_std: 5.0, meas_std: 0.003 }
    }
}

impl PuckTracker {
    pub fn reset(&mut self) {
        self.kf = None;
        self.last = None;
    }

    pub fn update(&mut self, obs: &Observation) -> (Vector2<f64>, Vector2<f64>) {
        let z = Vector2::new(obs.puck.x, obs.puck.y);
        let lost = obs.puck.vx == 0.0 && obs.puck.vy == 0.0 && self.last == Some(z);
        self.last = Some(z);
        let next = match self.kf {
            None => {
                let mut kf = KalmanState::new(z, self.meas_std.powi(2), 0.25, self.accel_std, self.meas_std);
                kf.mean[2] = obs.puck.vx;
                kf.mean[3] = obs.puck.vy;
                kf
            }
            Some(kf) => match kalman_step(&kf, (!lost).then_some(z), CONTROL_DT) {
                Ok(k) => k,
                Err(_) => KalmanState::new(z, self.meas_std.powi(2), 0.25, self.accel_std, self.meas_std),
            },
        };
        self.kf = Some(next);
        (next.position(), next.velocity())
    }
}

pub struct HoldAgent {
    q_home: JointVector,
}

impl HoldAgent {
    pub fn new(ctx: &AgentContext) -> Self {
        Self { q_home: ctx.robot.q_init }
    }
}

impl Agent for HoldAgent {
    fn name(&self) -> &str {
        "hold"
    }

    fn reset(&mut self) {}

    fn act(&mut self, _obs: &Observation) -> Result<Command, AgentError> {
        Ok(Command::hold(self.q_home))
    }
}

pub struct SpacerAgent {
    ctx: AgentContext,
    tracker: PuckTracker,
    pub margins: EnsembleMargins,
    pub strategy: Strategy,
}

impl SpacerAgent {
    pub fn new(ctx: &AgentContext) -> Self {
        Self { ctx: ctx.clone(), tracker: PuckTracker::default(), margins: EnsembleMargins::default(), strategy: Strategy::Balanced }
    }

    fn target(&self, p: Vector2<f64>, v: Vector2<f64>, ee: Vector2<f64>) -> Vector2<f64> {
        let half = 0.5 * self.ctx.table.length;
        let block_x = match self.strategy {
            Strategy::Aggressive => 0.35,
            Strategy::Balanced => 0.25,
            Strategy::Defensive => 0.15,
        };
        let chase = p.x < half - 0.05 && (v.x > -0.3 || self.strategy == Strategy::Aggressive);
        if chase {
            let goal = Vector2::new(self.ctx.table.length, 0.0);
            let dir = (goal - p).normalize();
            let behind = p - dir * (self.ctx.table.contact_distance() + 0.05);
            // Line up behind the puck first, then drive through it.
            if (ee - behind).norm() > 0.04 && ee.x > p.x - 0.02 {
                let side = if ee.y > p.y { 1.0 } else { -1.0 };
                return Vector2::new(p.x - 0.12, p.y + side * 0.1);
            }
            if (ee - behind).norm() > 0.04 {
                return behind;
            }
            return p + dir * 0.1;
        }
        let y = if v.x < -1e-3 {
            let t = (block_x - p.x) / v.x;
            reflect_y(p.y + v.y * t, self.ctx.table.puck_y_limit())
        } else {
            0.5 * p.y
        };
        Vector2::new(block_x, y)
    }
}

/// Fold a straight-line lateral prediction back inside the side walls.
fn reflect_y(y: f64, limit: f64) -> f64 {
    let period = 4.0 * limit;
    let mut u = (y + limit).rem_euclid(period);
    if u > 2.0 * limit {
        u = period - u;
    }
    u - limit
}

impl Agent for SpacerAgent {
    fn name(&self) -> &str {
        "spacer"
    }

    fn reset(&mut self) {
        self.tracker.reset();
        self.strategy = Strategy::Balanced;
    }

    fn act(&mut self, obs: &Observation) -> Result<Command, AgentError> {
        self.strategy = ensemble_select(obs.own_score as f64 - obs.opponent_score as f64, &self.margins);
        let (p, v) = self.tracker.update(obs);
        let ee = self.ctx.ee(&obs.q);
        let target = self.target(p, v, ee);
        Ok(self.ctx.command_toward(&target, &obs.q, &IkOptions::default()))
    }
}

/// Tunables of the composite agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeParams {
    pub conditions: AhConditionParams,
    pub hit_speed: f64,
    pub prepare_speed: f64,
    pub approach_speed: f64,
    pub backoff: f64,
    pub shot_sampler: SamplerConfig,
    pub weights: ShotCostWeights,
    /// Replan when the predicted contact puck moves by more than this (m).
    pub replan_tolerance: f64,
    /// Steps a fresh plan is followed before it may be replaced.
    pub min_replan_steps: usize,
    pub model_dt: f64,
}

impl Default for CompositeParams {
    fn default() -> Self {
        Self {
            conditions: AhConditionParams::default(),
            hit_speed: 1.2,
            prepare_speed: 0.4,
            approach_speed: 0.8,
            backoff: 0.1,
            shot_sampler: SamplerConfig { iterations: 5, population: 32, initial_std: 0.1, shrink: 0.5, rollouts: 1 },
            weights: ShotCostWeights::default(),
            replan_tolerance: 0.03,
            min_replan_steps: 10,
            model_dt: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct StrikePlan {
    targets: Vec<Vector2<f64>>,
    next: usize,
    contact_step: usize,
    puck_at_contact: Vector2<f64>,
}

fn shot_context<'a>(model: &'a PiecewiseLinearPuckModel, ctx: &'a AgentContext, params: &CompositeParams) -> ShotContext<'a> {
    ShotContext {
        model,
        geom: &ctx.table,
        mallet_restitution: ctx.puck.mallet_restitution,
        mallet_speed: params.hit_speed,
        horizon_steps: (2.0 / model.dt) as usize,
        angle_limit: 80f64.to_radians(),
        rollouts: 1,
    }
}

pub struct CompositeAgent {
    ctx: AgentContext,
    pub params: CompositeParams,
    model: PiecewiseLinearPuckModel,
    tracker: PuckTracker,
    sm: AhStateMachine,
    plan: Option<StrikePlan>,
    skill: Skill,
    rng: ChaCha8Rng,
    seed: u64,
}

impl CompositeAgent {
    pub fn new(ctx: &AgentContext, seed: u64) -> Self {
        let params = CompositeParams::default();
        let model = PiecewiseLinearPuckModel::from_physics(&ctx.puck, &ctx.table, params.model_dt);
        Self {
            ctx: ctx.clone(),
            params,
            model,
            tracker: PuckTracker::default(),
            sm: AhStateMachine::new(params.conditions),
            plan: None,
            skill: Skill::ResetToHome,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    pub fn state(&self) -> &AhStateMachine {
        &self.sm
    }

    fn belief(p: Vector2<f64>, v: Vector2<f64>) -> EkfBelief {
        EkfBelief::new(PuckVector::new(p.x, p.y, v.x, v.y), Matrix4::zeros())
    }

    fn shot_context(&self) -> ShotContext<'_> {
        shot_context(&self.model, &self.ctx, &self.params)
    }

    /// Approach a point behind the predicted puck, then accelerate through it
    /// along `angle` (or along the best shooting angle when `None`).
    fn strike_plan(&mut self, p: Vector2<f64>, v: Vector2<f64>, ee: Vector2<f64>, speed: f64, aim: Option<Vector2<f64>>) -> Option<StrikePlan> {
        let belief = Self::belief(p, v);
        let cd = self.ctx.table.contact_distance();
        let backoff = self.params.backoff;
        let strike_steps = ((2.0 * backoff / speed) / CONTROL_DT).round().max(2.0) as usize;
        let mut t_contact = 0.6;
        let mut layout = None;
        for _ in 0..2 {
            let predicted = predict_belief(&belief, t_contact, &self.shot_context());
            let puck_c = Vector2::new(predicted.mean.x, predicted.mean.y);
            let angle = match aim {
                Some(goal) => {
                    let d = goal - puck_c;
                    d.y.atan2(d.x)
                }
                None => {
                    let ctx = shot_context(&self.model, &self.ctx, &self.params);
                    plan_shot(&belief, t_contact, &ctx, &self.params.shot_sampler, &self.params.weights, &mut self.rng).ok()?.angle
                }
            };
            let d = Vector2::new(angle.cos(), angle.sin());
            let contact = puck_c - d * cd;
            let waypoint = self.ctx.safe_target(&(contact - d * backoff));
            let approach_steps = (((waypoint - ee).norm() / self.params.approach_speed + 0.1) / CONTROL_DT).ceil().max(5.0) as usize;
            t_contact = (approach_steps + strike_steps) as f64 * CONTROL_DT;
            layout = Some((puck_c, d, contact, waypoint, approach_steps));
        }
        let (puck_c, d, contact, waypoint, approach_steps) = layout?;
        if !self.ctx.table.inside_ee_bounds(contact.x, contact.y) {
            return None;
        }

        let mut targets = Vec::new();
        // Detour sideways when the straight approach would sweep the puck.
        let detour = {
            let seg = waypoint - ee;
            let s = ((p - ee).dot(&seg) / seg.norm_squared().max(1e-12)).clamp(0.0, 1.0);
            let closest = ee + seg * s;
            ((closest - p).norm() < cd + 0.03).then(|| {
                let normal = Vector2::new(-d.y, d.x);
                let side = if (ee - p).dot(&normal) >= 0.0 { 1.0 } else { -1.0 };
                self.ctx.safe_target(&(p + normal * (side * (cd + 0.08)) - d * 0.04))
            })
        };
        let legs: Vec<(Vector2<f64>, Vector2<f64>, usize)> = match detour {
            Some(via) => {
                let half = approach_steps.div_ceil(2).max(3);
                vec![(ee, via, half), (via, waypoint, half)]
            }
            None => vec![(ee, waypoint, approach_steps)],
        };
        for (a, b, steps) in legs {
            let dur = steps as f64 * CONTROL_DT;
            for k in 1..=steps {
                targets.push(hermite(a, Vector2::zeros(), b, Vector2::zeros(), dur, k as f64 * CONTROL_DT).0);
            }
        }
        let plan = ContactPlan {
            time: strike_steps as f64 * CONTROL_DT,
            mallet: MalletState { x: contact.x, y: contact.y, vx: speed * d.x, vy: speed * d.y },
            intent: ContactIntent::Shoot,
            post_contact: PuckVector::zeros(),
            cost: 0.0,
        };
        let traj = plan_mallet_trajectory(
            (waypoint, Vector2::zeros()),
            &plan,
            &TrajectoryParams::default(),
            &SamplerConfig { population: 16, ..SamplerConfig::default() },
            &self.ctx.table,
            &mut self.rng,
        )
        .ok()?;
        let contact_step = targets.len() + traj.contact_index;
        targets.extend(traj.samples.iter().skip(1).map(|s| s.pos));
        Some(StrikePlan { targets, next: 0, contact_step, puck_at_contact: puck_c })
    }

    fn plan_is_stale(&self, plan: &StrikePlan, p: Vector2<f64>, v: Vector2<f64>) -> bool {
        if plan.next >= plan.targets.len() {
            return true;
        }
        if plan.next < self.params.min_replan_steps || plan.next + 3 >= plan.contact_step {
            return false;
        }
        let remaining = (plan.contact_step - plan.next) as f64 * CONTROL_DT;
        let predicted = predict_belief(&Self::belief(p, v), remaining, &self.shot_context());
        (Vector2::new(predicted.mean.x, predicted.mean.y) - plan.puck_at_contact).norm() > self.params.replan_tolerance
    }

    fn follow_plan(&mut self, p: Vector2<f64>, v: Vector2<f64>, ee: Vector2<f64>, aim: Option<Vector2<f64>>, speed: f64) -> Vector2<f64> {
        let stale = self.plan.as_ref().is_none_or(|plan| self.plan_is_stale(plan, p, v));
        if stale {
            self.plan = self.strike_plan(p, v, ee, speed, aim);
        }
        match self.plan.as_mut() {
            Some(plan) => {
                let t = plan.targets[plan.next.min(plan.targets.len() - 1)];
                plan.next += 1;
                t
            }
            None => ee,
        }
    }

    fn defend_target(&mut self, p: Vector2<f64>, v: Vector2<f64>) -> Vector2<f64> {
        let ctx = DeflectionContext {
            model: &self.model,
            geom: &self.ctx.table,
            mallet_restitution: self.ctx.puck.mallet_restitution,
            band: ReachBand { x_min: 0.1, x_max: 0.3 },
            max_mallet_speed: 0.5,
            horizon_steps: (1.5 / self.model.dt) as usize,
            prepare_speed: 0.3,
        };
        let sampler = SamplerConfig { iterations: 4, population: 24, ..SamplerConfig::default() };
        match plan_deflection(&Self::belief(p, v), 0.0, ContactIntent::Deflect, &ctx, &sampler, &mut self.rng) {
            Ok(plan) => Vector2::new(plan.mallet.x, plan.mallet.y),
            Err(_) => Vector2::new(0.2, reflect_y(p.y, self.ctx.table.puck_y_limit())),
        }
    }
}

impl Agent for CompositeAgent {
    fn name(&self) -> &str {
        "composite"
    }

    fn reset(&mut self) {
        self.tracker.reset();
        self.sm = AhStateMachine::new(self.params.conditions);
        self.plan = None;
        self.skill = Skill::ResetToHome;
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
    }

    fn act(&mut self, obs: &Observation) -> Result<Command, AgentError> {
        let (p, v) = self.tracker.update(obs);
        let ee = self.ctx.ee(&obs.q);
        let base_x = self.ctx.robot.base.translation[0];
        let inputs = AhInputs::from_own_frame(p, v, ee.x, base_x);
        let (sm, skill) = ah_step(&self.sm, &inputs);
        self.sm = sm;
        if skill != self.skill {
            self.plan = None;
            self.skill = skill;
        }
        let mut opts = IkOptions::default();
        let target = match skill {
            Skill::Hit => self.follow_plan(p, v, ee, None, self.params.hit_speed),
            Skill::Prepare => {
                let goal = Vector2::new(0.5 * self.ctx.table.length - 0.5, 0.0);
                self.follow_plan(p, v, ee, Some(goal), self.params.prepare_speed)
            }
            Skill::Defend => self.defend_target(p, v),
            Skill::ResetToHome => {
                opts.posture = Some(self.ctx.robot.q_init);
                opts.posture_gain = 0.5;
                self.ctx.home_ee()
            }
        };
        Ok(self.ctx.command_toward(&target, &obs.q, &opts))
    }
}

pub struct Rl3Agent {
    ctx: AgentContext,
    tracker: PuckTracker,
    fsm: Rl3Fsm,
    controller: Option<RuleController>,
    pub rule_params: RuleControllerParams,
    pub switcher_params: SwitcherParams,
    task_steps: u32,
    /// Steps after which an unfinished task is abandoned.
    pub task_timeout: u32,
}

impl Rl3Agent {
    pub fn new(ctx: &AgentContext) -> Self {
        let rule_params = RuleControllerParams {
            mallet_radius: ctx.table.mallet_radius,
            puck_radius: ctx.table.puck_radius,
            ..RuleControllerParams::default()
        };
        Self {
            ctx: ctx.clone(),
            tracker: PuckTracker::default(),
            fsm: Rl3Fsm::default(),
            controller: None,
            rule_params,
            switcher_params: SwitcherParams::default(),
            task_steps: 0,
            task_timeout: 150,
        }
    }

    pub fn task(&self) -> Rl3Task {
        self.fsm.state
    }
}

impl Agent for Rl3Agent {
    fn name(&self) -> &str {
        "rl3"
    }

    fn reset(&mut self) {
        self.tracker.reset();
        self.fsm = Rl3Fsm::default();
        self.controller = None;
        self.task_steps = 0;
    }

    fn act(&mut self, obs: &Observation) -> Result<Command, AgentError> {
        let (p, v) = self.tracker.update(obs);
        let ee = self.ctx.ee(&obs.q);
        let home = self.ctx.home_ee();
        let inputs = SwitcherInputs { puck_pos: p, puck_vel: v, half_length: 0.5 * self.ctx.table.length };
        let at_home = (ee - home).norm() < 0.03;
        let request = if self.fsm.state == Rl3Task::Home && !at_home { Rl3Task::Home } else { switcher(&inputs, &self.switcher_params) };
        let completed = self.task_steps >= self.task_timeout
            || match self.fsm.state {
                Rl3Task::Hit | Rl3Task::Prepare => self.controller.is_some_and(|c| c.done),
                Rl3Task::Defend | Rl3Task::CounterAttack => v.x > -0.1 || p.x > inputs.half_length,
                Rl3Task::Home => false,
            };
        let before = self.fsm.state;
        let (fsm, task) = rl3_fsm_step(&self.fsm, request, completed);
        self.fsm = fsm;
        if task != before {
            self.task_steps = 0;
            self.controller = match task {
                Rl3Task::Hit => Some(RuleController::new(RulePolicy::Hit)),
                Rl3Task::Prepare => Some(RuleController::new(RulePolicy::Prepare)),
                _ => None,
            };
        }
        self.task_steps += 1;
        let mut opts = IkOptions::default();
        let target = match (task, self.controller.as_mut()) {
            (Rl3Task::Hit | Rl3Task::Prepare, Some(c)) => c.step(&p, &ee, &self.rule_params).target,
            (Rl3Task::Defend | Rl3Task::CounterAttack, _) => {
                let block_x = 0.2;
                let y = if v.x < -1e-3 { p.y + v.y * (block_x - p.x) / v.x } else { p.y };
                Vector2::new(block_x, reflect_y(y, self.ctx.table.puck_y_limit()))
            }
            _ => {
                opts.posture = Some(self.ctx.robot.q_init);
                opts.posture_gain = 0.5;
                home
            }
        };
        Ok(self.ctx.command_toward(&target, &obs.q, &opts))
    }
}
