//! Mallet trajectories from a two-segment cubic basis: an approach segment
//! that meets the contact state exactly, then a follow-through segment that
//! brings the mallet to rest. Each cubic is the minimum integrated squared
//! acceleration curve for its clamped boundary conditions.

use nalgebra::Vector2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::deflection::ContactPlan;
use super::sampler::SamplerConfig;
use super::PlanningError;
use crate::sim::TableGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryParams {
    pub dt: f64,
    /// Duration of the stopping segment after contact (s).
    pub follow_through: f64,
    /// Relative spread of sampled final velocities.
    pub velocity_spread: f64,
    /// Shortest approach segment (s).
    pub min_horizon: f64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self { dt: 0.02, follow_through: 0.3, velocity_spread: 0.3, min_horizon: 0.02 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MalletSample {
    pub t: f64,
    pub pos: Vector2<f64>,
    pub vel: Vector2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MalletTrajectory {
    /// Samples every `dt` starting at the current state.
    pub samples: Vec<MalletSample>,
    /// Index of the sample at the contact time.
    pub contact_index: usize,
    pub final_velocity: Vector2<f64>,
    pub velocity_error: f64,
}

impl MalletTrajectory {
    /// The setpoint to send this control step.
    pub fn first_action(&self) -> MalletSample {
        self.samples.get(1).copied().unwrap_or(self.samples[0])
    }
}

/// Cubic Hermite segment evaluated at `t ∈ [0, duration]`.
pub fn hermite(p0: Vector2<f64>, v0: Vector2<f64>, p1: Vector2<f64>, v1: Vector2<f64>, duration: f64, t: f64) -> (Vector2<f64>, Vector2<f64>) {
    let s = (t / duration).clamp(0.0, 1.0);
    let (s2, s3) = (s * s, s * s * s);
    let pos = p0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + v0 * (duration * (s3 - 2.0 * s2 + s))
        + p1 * (-2.0 * s3 + 3.0 * s2)
        + v1 * (duration * (s3 - s2));
    let vel = p0 * ((6.0 * s2 - 6.0 * s) / duration)
        + v0 * (3.0 * s2 - 4.0 * s + 1.0)
        + p1 * ((-6.0 * s2 + 6.0 * s) / duration)
        + v1 * (3.0 * s2 - 2.0 * s);
    (pos, vel)
}

fn build(
    start: (Vector2<f64>, Vector2<f64>),
    contact_pos: Vector2<f64>,
    final_velocity: Vector2<f64>,
    horizon: f64,
    params: &TrajectoryParams,
) -> (Vec<MalletSample>, usize) {
    let steps = (horizon / params.dt).round().max(1.0) as usize;
    let duration = steps as f64 * params.dt;
    let mut samples: Vec<MalletSample> = (0..=steps)
        .map(|k| {
            let t = k as f64 * params.dt;
            let (pos, vel) = hermite(start.0, start.1, contact_pos, final_velocity, duration, t);
            MalletSample { t, pos, vel }
        })
        .collect();
    // Pin the contact sample so the boundary condition holds to rounding.
    samples[steps].pos = contact_pos;
    samples[steps].vel = final_velocity;
    let ft_steps = (params.follow_through / params.dt).round() as usize;
    if ft_steps > 0 {
        let ft = ft_steps as f64 * params.dt;
        let rest = contact_pos + final_velocity * (0.5 * ft);
        for k in 1..=ft_steps {
            let t = k as f64 * params.dt;
            let (pos, vel) = hermite(contact_pos, final_velocity, rest, Vector2::zeros(), ft, t);
            samples.push(MalletSample { t: duration + t, pos, vel });
        }
    }
    (samples, steps)
}

/// Sample final velocities around the contact velocity and keep the
/// in-bounds trajectory whose final velocity is closest to it.
pub fn plan_mallet_trajectory<R: Rng + ?Sized>(
    current: (Vector2<f64>, Vector2<f64>),
    contact: &ContactPlan,
    params: &TrajectoryParams,
    sampler: &SamplerConfig,
    geom: &TableGeometry,
    rng: &mut R,
) -> Result<MalletTrajectory, PlanningError> {
    let contact_pos = Vector2::new(contact.mallet.x, contact.mallet.y);
    let wanted = Vector2::new(contact.mallet.vx, contact.mallet.vy);
    if !geom.inside_ee_bounds(contact_pos.x, contact_pos.y) {
        return Err(PlanningError::ContactOutOfBounds { x: contact_pos.x, y: contact_pos.y });
    }
    let horizon = contact.time.max(params.min_horizon);
    let scale = wanted.norm().max(0.1) * params.velocity_spread;
    let mut best: Option<MalletTrajectory> = None;
    for i in 0..sampler.population.max(1) {
        let v = if i == 0 {
            wanted
        } else {
            // Shrink toward rest so slower follow-throughs stay on the table.
            let shrink = (1.0 - (rng.sample::<f64, _>(StandardNormal) * params.velocity_spread).abs()).max(0.0);
            let jitter = Vector2::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * (0.2 * scale);
            wanted * shrink + jitter
        };
        let error = (v - wanted).norm();
        if best.as_ref().is_some_and(|b| b.velocity_error <= error) {
            continue;
        }
        let (samples, contact_index) = build(current, contact_pos, v, horizon, params);
        if samples.iter().all(|s| geom.inside_ee_bounds(s.pos.x, s.pos.y)) {
            best = Some(MalletTrajectory { samples, contact_index, final_velocity: v, velocity_error: error });
        }
    }
    best.ok_or(PlanningError::NoInBoundsTrajectory)
}
