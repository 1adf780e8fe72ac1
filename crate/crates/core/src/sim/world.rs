use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::arm::{step_arm, ArmTrackingModel, JointState};
use super::geometry::{GeometryError, Side, TableGeometry};
use super::interpolation::{interpolate_command, Command, SetpointSample, SAMPLES_PER_TICK, SIM_DT};
use super::puck::{step_puck, ContactMemory, MalletState, PuckEvent, PuckParams, PuckState};
use crate::kinematics::{forward_kinematics, jacobian, FramePoses, JointVector, RobotSpec, SpecError};

#[derive(Debug, Error)]
pub enum WorldConfigError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Robot(#[from] SpecError),
    #[error("puck parameters out of range: {0:?}")]
    Puck(PuckParams),
    #[error("arm tracking model for {0:?} is invalid")]
    Arm(Side),
    #[error("fault limit must be positive, got {0}")]
    FaultLimit(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub table: TableGeometry,
    pub puck: PuckParams,
    pub robot: RobotSpec,
    pub arms: [ArmTrackingModel; 2],
    /// Seconds the puck may stay on one half before a fault is called.
    pub fault_limit_s: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            table: TableGeometry::default(),
            puck: PuckParams::default(),
            robot: RobotSpec::default(),
            arms: [ArmTrackingModel::ideal(); 2],
            fault_limit_s: 15.0,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), WorldConfigError> {
        self.table.validate()?;
        self.robot.validate()?;
        if !self.puck.is_valid() {
            return Err(WorldConfigError::Puck(self.puck));
        }
        for side in Side::BOTH {
            if !self.arms[side.index()].is_valid() {
                return Err(WorldConfigError::Arm(side));
            }
        }
        if !(self.fault_limit_s > 0.0) {
            return Err(WorldConfigError::FaultLimit(self.fault_limit_s));
        }
        Ok(())
    }

    fn fault_limit_ms(&self) -> u64 {
        (self.fault_limit_s * 1000.0).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Goal { scorer: Side, speed: f64, time_ms: u64 },
    Fault { side: Side, time_ms: u64 },
    CommandFault { side: Side, time_ms: u64, reason: String },
    MalletContact { side: Side, time_ms: u64, degenerate: bool },
    WallContact { time_ms: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    /// Puck in the home side's frame.
    pub puck: PuckState,
    pub arms: [JointState; 2],
    /// Last interpolated setpoint per arm; the next command starts here.
    pub setpoints: [SetpointSample; 2],
    pub time_ms: u64,
    pub dwell_ms: [u64; 2],
    pub goals: [u32; 2],
    pub faults: [u32; 2],
    pub contact_memory: ContactMemory,
}

impl WorldState {
    pub fn new(spec: &RobotSpec, puck: PuckState) -> Self {
        Self {
            puck,
            arms: [JointState::at_rest(spec.q_init); 2],
            setpoints: [SetpointSample::hold(spec.q_init); 2],
            time_ms: 0,
            dwell_ms: [0; 2],
            goals: [0; 2],
            faults: [0; 2],
            contact_memory: ContactMemory::default(),
        }
    }

    /// SHA-256 over the bit patterns of every numeric field.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |v: f64| h.update(v.to_bits().to_le_bytes());
        let p = &self.puck;
        for v in [p.x, p.y, p.theta, p.vx, p.vy, p.omega] {
            put(v);
        }
        for arm in &self.arms {
            arm.q.iter().chain(arm.qdot.iter()).for_each(|v| put(*v));
        }
        for s in &self.setpoints {
            s.q.iter().chain(s.qdot.iter()).chain(s.qddot.iter()).for_each(|v| put(*v));
        }
        for n in &self.contact_memory.normals {
            put(n.x);
            put(n.y);
        }
        h.update(self.time_ms.to_le_bytes());
        for side in 0..2 {
            h.update(self.dwell_ms[side].to_le_bytes());
            h.update(self.goals[side].to_le_bytes());
            h.update(self.faults[side].to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// What one agent sees, in its own side frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub puck: PuckState,
    pub q: JointVector,
    pub qdot: JointVector,
    /// Opponent mallet centre, mirrored into this side's frame.
    pub opponent_mallet: Vector2<f64>,
    pub time_ms: u64,
    pub own_score: u32,
    pub opponent_score: u32,
}

pub fn mirror_puck(puck: &PuckState, geom: &TableGeometry) -> PuckState {
    let (x, y) = geom.mirror_point(puck.x, puck.y);
    let theta = (puck.theta + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU);
    PuckState { x, y, theta, vx: -puck.vx, vy: -puck.vy, omega: puck.omega }
}

/// Puck as seen from `side`.
pub fn puck_in_frame(puck: &PuckState, side: Side, geom: &TableGeometry) -> PuckState {
    match side {
        Side::Home => *puck,
        Side::Away => mirror_puck(puck, geom),
    }
}

/// Mallet of `side` in the world frame.
pub fn mallet_state(cfg: &WorldConfig, side: Side, arm: &JointState) -> MalletState {
    let ee = forward_kinematics(&cfg.robot, &arm.q).ee;
    let v = jacobian(&cfg.robot, &arm.q) * arm.qdot;
    let own = MalletState { x: ee.x, y: ee.y, vx: v.x, vy: v.y };
    match side {
        Side::Home => own,
        Side::Away => {
            let (x, y) = cfg.table.mirror_point(own.x, own.y);
            MalletState { x, y, vx: -own.vx, vy: -own.vy }
        }
    }
}

fn serve_position(cfg: &WorldConfig, receiver: Side) -> PuckState {
    let own = PuckState::at_rest(0.25 * cfg.table.length, 0.0);
    puck_in_frame(&own, receiver, &cfg.table)
}

/// One control tick: interpolate both commands, then 20 × (arm, puck) substeps.
pub fn step_match(
    world: &WorldState,
    commands: [&Command; 2],
    cfg: &WorldConfig,
    rng: &mut ChaCha8Rng,
) -> (WorldState, Vec<Event>) {
    let mut next = world.clone();
    let mut events = Vec::new();
    let plans: [Vec<SetpointSample>; 2] = std::array::from_fn(|i| {
        let side = Side::BOTH[i];
        match interpolate_command(&world.setpoints[i], commands[i], SAMPLES_PER_TICK) {
            Ok(samples) => samples,
            Err(err) => {
                events.push(Event::CommandFault { side, time_ms: world.time_ms, reason: err.to_string() });
                vec![SetpointSample::hold(world.setpoints[i].q); SAMPLES_PER_TICK]
            }
        }
    });

    let mut mallet_seen = [false; 2];
    let mut wall_seen = false;
    let half = 0.5 * cfg.table.length;
    let fault_limit = cfg.fault_limit_ms();
    for k in 0..SAMPLES_PER_TICK {
        next.time_ms += 1;
        for i in 0..2 {
            let target = JointState { q: plans[i][k].q, qdot: plans[i][k].qdot };
            next.arms[i] = step_arm(&cfg.arms[i], &next.arms[i], &target, &cfg.robot.q_init, SIM_DT);
        }
        let mallets = [mallet_state(cfg, Side::Home, &next.arms[0]), mallet_state(cfg, Side::Away, &next.arms[1])];
        let out = step_puck(&next.puck, &mallets, &cfg.puck, &cfg.table, SIM_DT, &mut next.contact_memory, rng);
        next.puck = out.puck;
        let mut scored = None;
        for ev in out.events {
            match ev {
                PuckEvent::Goal { scorer, speed } => scored = Some((scorer, speed)),
                PuckEvent::MalletContact { side, degenerate } if !mallet_seen[side.index()] => {
                    mallet_seen[side.index()] = true;
                    events.push(Event::MalletContact { side, time_ms: next.time_ms, degenerate });
                }
                PuckEvent::WallContact if !wall_seen => {
                    wall_seen = true;
                    events.push(Event::WallContact { time_ms: next.time_ms });
                }
                _ => {}
            }
        }
        if let Some((scorer, speed)) = scored {
            events.push(Event::Goal { scorer, speed, time_ms: next.time_ms });
            next.goals[scorer.index()] += 1;
            next.puck = serve_position(cfg, scorer.opponent());
            next.dwell_ms = [0; 2];
            continue;
        }
        let side = if next.puck.x < half { Side::Home } else { Side::Away };
        next.dwell_ms[side.opponent().index()] = 0;
        next.dwell_ms[side.index()] += 1;
        if next.dwell_ms[side.index()] >= fault_limit {
            events.push(Event::Fault { side, time_ms: next.time_ms });
            next.faults[side.index()] += 1;
            next.dwell_ms[side.index()] = 0;
        }
    }
    next.setpoints = [*plans[0].last().expect("20 samples"), *plans[1].last().expect("20 samples")];
    (next, events)
}

/// A running match: configuration, state and its private random stream.
#[derive(Debug, Clone)]
pub struct World {
    pub cfg: WorldConfig,
    pub state: WorldState,
    rng: ChaCha8Rng,
}

impl World {
    pub fn new(cfg: WorldConfig, puck: PuckState, seed: u64) -> Result<Self, WorldConfigError> {
        cfg.validate()?;
        let state = WorldState::new(&cfg.robot, puck);
        Ok(Self { cfg, state, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn step(&mut self, commands: [&Command; 2]) -> Vec<Event> {
        let (next, events) = step_match(&self.state, commands, &self.cfg, &mut self.rng);
        self.state = next;
        events
    }

    pub fn place_puck(&mut self, puck: PuckState) {
        self.state.puck = puck;
        self.state.dwell_ms = [0; 2];
    }

    /// Frames of `side`'s arm in that side's own frame.
    pub fn poses(&self, side: Side) -> FramePoses {
        forward_kinematics(&self.cfg.robot, &self.state.arms[side.index()].q)
    }

    pub fn observe(&self, side: Side) -> Observation {
        let geom = &self.cfg.table;
        let other = side.opponent();
        let opp = mallet_state(&self.cfg, other, &self.state.arms[other.index()]);
        let opp_own = match side {
            Side::Home => Vector2::new(opp.x, opp.y),
            Side::Away => {
                let (x, y) = geom.mirror_point(opp.x, opp.y);
                Vector2::new(x, y)
            }
        };
        let arm = &self.state.arms[side.index()];
        Observation {
            puck: puck_in_frame(&self.state.puck, side, geom),
            q: arm.q,
            qdot: arm.qdot,
            opponent_mallet: opp_own,
            time_ms: self.state.time_ms,
            own_score: self.state.goals[side.index()],
            opponent_score: self.state.goals[other.index()],
        }
    }
}
