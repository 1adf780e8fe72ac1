//! Planar puck dynamics at the simulator rate.

use nalgebra::Vector2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::geometry::{Side, TableGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PuckState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl PuckState {
    pub fn at_rest(x: f64, y: f64) -> Self {
        Self { x, y, ..Self::default() }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.vx, self.vy)
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    /// Translational kinetic energy per unit mass.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * (self.vx * self.vx + self.vy * self.vy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PuckParams {
    /// Exponential decay rate of the linear velocity (1/s).
    pub slide_friction: f64,
    /// Exponential decay rate of the spin (1/s).
    pub spin_friction: f64,
    pub wall_restitution: f64,
    pub mallet_restitution: f64,
    /// Fraction of the tangential wall speed converted into spin. Only affects `omega`.
    pub spin_coupling: f64,
    /// Standard deviation of the white acceleration disturbance (m/s²).
    pub disturbance_std: f64,
}

impl Default for PuckParams {
    fn default() -> Self {
        Self {
            slide_friction: 0.1,
            spin_friction: 0.5,
            wall_restitution: 0.8,
            mallet_restitution: 0.8,
            spin_coupling: 0.1,
            disturbance_std: 0.0,
        }
    }
}

impl PuckParams {
    pub fn is_valid(&self) -> bool {
        let unit = |e: f64| e > 0.0 && e <= 1.0;
        unit(self.wall_restitution)
            && unit(self.mallet_restitution)
            && self.slide_friction >= 0.0
            && self.spin_friction >= 0.0
            && self.disturbance_std >= 0.0
    }
}

/// Planar mallet centre and velocity in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MalletState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl MalletState {
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.vx, self.vy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PuckEvent {
    /// The puck crossed a goal line inside the mouth; `scorer` is the attacking side.
    Goal { scorer: Side, speed: f64 },
    MalletContact { side: Side, degenerate: bool },
    WallContact,
}

/// Last contact normal per mallet, used when the centres coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactMemory {
    pub normals: [Vector2<f64>; 2],
}

impl Default for ContactMemory {
    fn default() -> Self {
        Self { normals: [Vector2::x(), -Vector2::x()] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MalletContact {
    pub puck: PuckState,
    pub normal: Vector2<f64>,
    pub touched: bool,
    pub degenerate: bool,
}

/// Kinematic-mallet impulse: the mallet has infinite mass, the contact is
/// frictionless, and the puck is moved out of overlap along the normal.
pub fn resolve_mallet_contact(
    puck: &PuckState,
    mallet: &MalletState,
    restitution: f64,
    contact_distance: f64,
    previous_normal: Vector2<f64>,
) -> MalletContact {
    let offset = puck.position() - mallet.position();
    let dist = offset.norm();
    if dist > contact_distance {
        return MalletContact { puck: *puck, normal: previous_normal, touched: false, degenerate: false };
    }
    let degenerate = dist < 1e-12;
    let normal = if degenerate { previous_normal } else { offset / dist };
    let mut out = *puck;
    let placed = mallet.position() + normal * contact_distance;
    out.x = placed.x;
    out.y = placed.y;
    let approach = (puck.velocity() - mallet.velocity()).dot(&normal);
    if approach < 0.0 {
        let v = puck.velocity() - normal * ((1.0 + restitution) * approach);
        out.vx = v.x;
        out.vy = v.y;
    }
    MalletContact { puck: out, normal, touched: true, degenerate }
}

/// Reflect a coordinate that overshot a wall at `limit` (upper wall when
/// `sign > 0`). Returns true when a bounce happened.
fn reflect_axis(pos: &mut f64, vel: &mut f64, limit: f64, sign: f64, restitution: f64) -> bool {
    let excess = sign * *pos - limit;
    if excess <= 0.0 {
        return false;
    }
    *pos = sign * (limit - restitution * excess);
    if sign * *vel > 0.0 {
        *vel *= -restitution;
    }
    true
}

fn bounce_spin(puck: &mut PuckState, tangential: f64, params: &PuckParams, radius: f64) {
    puck.omega += params.spin_coupling * tangential / radius;
}

pub struct PuckStep {
    pub puck: PuckState,
    pub events: Vec<PuckEvent>,
}

/// Advance the puck by `dt`: decay and disturbance, position update, mallet
/// impulses, then wall reflections. Crossing a goal line inside the mouth emits
/// a goal and leaves the puck behind the line; the caller resets it.
pub fn step_puck<R: Rng + ?Sized>(
    puck: &PuckState,
    mallets: &[MalletState; 2],
    params: &PuckParams,
    geom: &TableGeometry,
    dt: f64,
    memory: &mut ContactMemory,
    rng: &mut R,
) -> PuckStep {
    let max_rel = mallets
        .iter()
        .map(|m| (puck.velocity() - m.velocity()).norm())
        .fold(puck.speed(), f64::max);
    let substeps = ((max_rel * dt) / (0.5 * geom.puck_radius)).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;

    let mut state = *puck;
    let mut events = Vec::new();
    // Mallets move linearly across the step.
    for k in 0..substeps {
        let frac = (k + 1) as f64 / substeps as f64 - 1.0;
        let mallets_now = mallets.map(|m| MalletState {
            x: m.x + m.vx * dt * frac,
            y: m.y + m.vy * dt * frac,
            ..m
        });
        if let Some(goal) = substep(&mut state, &mallets_now, params, geom, h, memory, rng, &mut events) {
            events.push(goal);
            break;
        }
    }
    PuckStep { puck: state, events }
}

#[allow(clippy::too_many_arguments)]
fn substep<R: Rng + ?Sized>(
    state: &mut PuckState,
    mallets: &[MalletState; 2],
    params: &PuckParams,
    geom: &TableGeometry,
    h: f64,
    memory: &mut ContactMemory,
    rng: &mut R,
    events: &mut Vec<PuckEvent>,
) -> Option<PuckEvent> {
    let decay = (-params.slide_friction * h).exp();
    state.vx *= decay;
    state.vy *= decay;
    if params.disturbance_std > 0.0 {
        let ax: f64 = rng.sample(StandardNormal);
        let ay: f64 = rng.sample(StandardNormal);
        state.vx += params.disturbance_std * ax * h;
        state.vy += params.disturbance_std * ay * h;
    }
    state.omega *= (-params.spin_friction * h).exp();
    let prev_x = state.x;
    state.x += state.vx * h;
    state.y += state.vy * h;
    state.theta += state.omega * h;

    for side in Side::BOTH {
        let i = side.index();
        let contact = resolve_mallet_contact(state, &mallets[i], params.mallet_restitution, geom.contact_distance(), memory.normals[i]);
        if contact.touched {
            *state = contact.puck;
            memory.normals[i] = contact.normal;
            events.push(PuckEvent::MalletContact { side, degenerate: contact.degenerate });
        }
    }

    let y_lim = geom.puck_y_limit();
    let mut hit_wall = false;
    for sign in [1.0, -1.0] {
        let vx = state.vx;
        if reflect_axis(&mut state.y, &mut state.vy, y_lim, sign, params.wall_restitution) {
            bounce_spin(state, sign * vx, params, geom.puck_radius);
            hit_wall = true;
        }
    }

    let in_mouth = state.y.abs() < geom.goal_mouth_limit();
    let far = geom.length;
    if in_mouth {
        let speed = state.speed();
        if prev_x >= 0.0 && state.x < 0.0 {
            return Some(PuckEvent::Goal { scorer: Side::Away, speed });
        }
        if prev_x <= far && state.x > far {
            return Some(PuckEvent::Goal { scorer: Side::Home, speed });
        }
    } else {
        let x_lim_lo = geom.puck_radius;
        let x_lim_hi = far - geom.puck_radius;
        let vy = state.vy;
        if reflect_axis(&mut state.x, &mut state.vx, -x_lim_lo, -1.0, params.wall_restitution) {
            bounce_spin(state, vy, params, geom.puck_radius);
            hit_wall = true;
        }
        if reflect_axis(&mut state.x, &mut state.vx, x_lim_hi, 1.0, params.wall_restitution) {
            bounce_spin(state, -vy, params, geom.puck_radius);
            hit_wall = true;
        }
    }
    if hit_wall {
        events.push(PuckEvent::WallContact);
    }
    None
}
