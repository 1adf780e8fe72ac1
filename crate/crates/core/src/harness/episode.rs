use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::env::{EnvConfig, OpponentPattern};
use super::replay::{AgentRecord, ReplayRecord};
use super::seed::derive_seed;
use crate::estimation::noise::ObservationCorruptor;
use crate::kinematics::{forward_kinematics, IkOptions, RobotSpec};
use crate::metrics::{check_constraints, judge_task, ConstraintSet, EpisodeMeter, EpisodePenalty, EpisodeTrace, Task, ViolationFlags};
use crate::policies::{Agent, AgentContext, AgentError};
use crate::sim::safety::safety_height_correct;
use crate::sim::{Command, Event, Observation, PuckState, Side, TableGeometry, World};

/// Violation flags of one command. Direct commands are checked sample by sample.
pub fn command_flags(cmd: &Command, spec: &RobotSpec, set: &ConstraintSet) -> ViolationFlags {
    match &cmd.direct {
        Some(samples) => samples
            .iter()
            .map(|s| check_constraints(&s.q, &s.qdot, &forward_kinematics(spec, &s.q), set))
            .fold(ViolationFlags::default(), ViolationFlags::union),
        None => check_constraints(&cmd.q, &cmd.commanded_velocity(), &forward_kinematics(spec, &cmd.q), set),
    }
}

/// Outcome of asking one side for its command.
#[derive(Debug, Clone)]
pub struct ControlStep {
    pub observation: Observation,
    pub command: Command,
    pub flags: ViolationFlags,
    pub compute_time: Option<f64>,
    pub error: Option<AgentError>,
}

/// Observe, time the agent call only, apply the height safety layer and
/// check the constraints of what will actually be sent. A failing agent
/// holds its last setpoint.
pub fn control_step<R: Rng + ?Sized>(
    world: &World,
    side: Side,
    agent: &mut dyn Agent,
    corruptor: &mut ObservationCorruptor,
    rng: &mut R,
    timing: bool,
    set: &ConstraintSet,
) -> ControlStep {
    let observation = corruptor.corrupt(&world.observe(side), rng);
    let start = timing.then(Instant::now);
    let result = agent.act(&observation);
    let compute_time = start.map(|t| t.elapsed().as_secs_f64());
    let spec = &world.cfg.robot;
    let current = world.state.setpoints[side.index()].q;
    match result {
        Ok(cmd) => {
            let command = safety_height_correct(spec, &current, &cmd, &world.cfg.table).command;
            let flags = command_flags(&command, spec, set);
            ControlStep { observation, command, flags, compute_time, error: None }
        }
        Err(e) => ControlStep { observation, command: Command::hold(current), flags: ViolationFlags::default(), compute_time, error: Some(e) },
    }
}

/// Scripted opponent for the single-robot tasks.
pub struct PatternAgent {
    ctx: AgentContext,
    pattern: OpponentPattern,
}

impl PatternAgent {
    pub fn new(ctx: AgentContext, pattern: OpponentPattern) -> Self {
        Self { ctx, pattern }
    }
}

impl Agent for PatternAgent {
    fn name(&self) -> &str {
        "pattern"
    }

    fn reset(&mut self) {}

    fn act(&mut self, obs: &Observation) -> Result<Command, AgentError> {
        match self.pattern {
            OpponentPattern::Hold => Ok(Command::hold(self.ctx.robot.q_init)),
            OpponentPattern::Sweep { x, amplitude, period_s } => {
                let t = obs.time_ms as f64 * 1e-3;
                let y = amplitude * (std::f64::consts::TAU * t / period_s).sin();
                let target = self.ctx.safe_target(&nalgebra::Vector2::new(x, y));
                Ok(crate::policies::track_target(&target, &obs.q, &self.ctx.robot, &self.ctx.table, &IkOptions::default()).command)
            }
        }
    }
}

/// Random start for each task, in the agent's own frame.
pub fn initial_puck<R: Rng + ?Sized>(task: Task, geom: &TableGeometry, rng: &mut R) -> PuckState {
    let half = 0.5 * geom.length;
    let y_lim = geom.puck_y_limit();
    match task {
        Task::Hit => {
            let speed = rng.random_range(0.0..0.1);
            let heading = rng.random_range(0.0..std::f64::consts::TAU);
            PuckState {
                x: half + rng.random_range(-0.7..-0.25),
                y: rng.random_range(-0.35..0.35),
                vx: speed * heading.cos(),
                vy: speed * heading.sin(),
                ..PuckState::default()
            }
        }
        Task::Defend => {
            let (x, y) = (half + rng.random_range(0.25..0.6), rng.random_range(-0.4..0.4));
            let aim = (0.0, rng.random_range(-0.3..0.3));
            let speed = rng.random_range(1.0..2.5);
            let (dx, dy) = (aim.0 - x, aim.1 - y);
            let n = (dx * dx + dy * dy).sqrt();
            PuckState { x, y, vx: speed * dx / n, vy: speed * dy / n, ..PuckState::default() }
        }
        Task::Prepare => {
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            PuckState {
                x: half + rng.random_range(-0.8..-0.2),
                y: side * rng.random_range(0.38..(y_lim - 0.02)),
                ..PuckState::default()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComputeStats {
    pub count: usize,
    pub mean: f64,
    pub max: f64,
}

impl ComputeStats {
    fn from_times(times: &[f64]) -> Self {
        if times.is_empty() {
            return Self::default();
        }
        Self {
            count: times.len(),
            mean: times.iter().sum::<f64>() / times.len() as f64,
            max: times.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub task: Task,
    pub success: bool,
    pub penalty: EpisodePenalty,
    pub steps: usize,
    pub events: Vec<Event>,
    pub compute: ComputeStats,
    pub seed: u64,
    /// Agent error that ended the episode.
    pub failure: Option<String>,
    pub final_state_hash: String,
}

impl EpisodeResult {
    /// Hash of everything except wall-clock compute statistics.
    pub fn digest(&self) -> String {
        let mut clean = self.clone();
        clean.compute = ComputeStats::default();
        clean.penalty.compute_points = 0.0;
        let json = serde_json::to_string(&clean).expect("result serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

fn terminal(task: Task, events: &[Event], puck: &PuckState, geom: &TableGeometry) -> bool {
    if events.iter().any(|e| matches!(e, Event::Goal { .. })) {
        return true;
    }
    task == Task::Prepare && puck.x > 0.5 * geom.length
}

pub fn run_episode(task: Task, agent: &mut dyn Agent, env: &EnvConfig, seed: u64) -> EpisodeResult {
    run_episode_logged(task, agent, env, seed, None)
}

/// `log` receives one record per control step, tagged with `episode`.
pub fn run_episode_logged(task: Task, agent: &mut dyn Agent, env: &EnvConfig, seed: u64, mut log: Option<(&mut Vec<ReplayRecord>, usize)>) -> EpisodeResult {
    let resolved = env.resolve();
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1]));
    let mut model_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[2]));
    let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[3]));
    let cfg = resolved.simulated_world(&mut model_rng);
    let geom = cfg.table;
    let puck = initial_puck(task, &geom, &mut init_rng);
    let mut world = World::new(cfg, puck, derive_seed(seed, &[4])).expect("validated configuration");
    let set = ConstraintSet::new(&world.cfg.robot, &geom);
    let mut opponent = PatternAgent::new(AgentContext::from_world(&env.world), env.opponent);
    let mut corruptor = ObservationCorruptor::new(resolved.noise);

    agent.reset();
    let mut meter = EpisodeMeter::default();
    let mut times = Vec::new();
    let mut trace = EpisodeTrace { puck: vec![puck], ..EpisodeTrace::default() };
    let mut events = Vec::new();
    let mut failure = None;
    let mut steps = 0;
    while steps < env.episode_steps {
        let step = control_step(&world, Side::Home, agent, &mut corruptor, &mut noise_rng, env.timing, &set);
        if let Some(e) = &step.error {
            meter.mark_failed();
            failure = Some(e.to_string());
            break;
        }
        meter.record_step(step.flags, step.compute_time);
        times.extend(step.compute_time);
        let opp_obs = world.observe(Side::Away);
        let opp_cmd = opponent.act(&opp_obs).unwrap_or_else(|_| Command::hold(world.cfg.robot.q_init));
        let step_events = world.step([&step.command, &opp_cmd]);
        steps += 1;
        let puck_now = world.state.puck;
        for e in &step_events {
            match e {
                Event::MalletContact { side: Side::Home, .. } if trace.first_contact.is_none() => trace.first_contact = Some(trace.puck.len()),
                Event::Goal { scorer: Side::Home, speed, .. } => trace.scored = Some(*speed),
                Event::Goal { scorer: Side::Away, .. } => trace.conceded = true,
                _ => {}
            }
        }
        trace.puck.push(puck_now);
        if let Some((records, episode)) = log.as_mut() {
            records.push(ReplayRecord {
                episode: *episode,
                step: steps - 1,
                world: world.state.clone(),
                agents: vec![
                    AgentRecord { side: Side::Home, observation: step.observation, command: step.command.clone(), compute_time: step.compute_time },
                    AgentRecord { side: Side::Away, observation: opp_obs, command: opp_cmd.clone(), compute_time: None },
                ],
                events: step_events.clone(),
            });
        }
        let done = terminal(task, &step_events, &puck_now, &geom);
        events.extend(step_events);
        if done {
            break;
        }
    }
    let success = failure.is_none() && judge_task(task, &trace, &env.success, &geom);
    EpisodeResult {
        task,
        success,
        penalty: meter.finish(&env.penalty),
        steps,
        events,
        compute: ComputeStats::from_times(&times),
        seed,
        failure,
        final_state_hash: world.state.hash(),
    }
}
