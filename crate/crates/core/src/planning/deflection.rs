use nalgebra::Vector2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampler::{sample_minimize, SamplerConfig};
use super::{PlanningError, CONTACT_SLACK};
use crate::estimation::piecewise::{ekf_rollout, EkfBelief, PiecewiseLinearPuckModel, PuckVector};
use crate::sim::puck::resolve_mallet_contact;
use crate::sim::{MalletState, PuckState, TableGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContactIntent {
    Shoot,
    Deflect,
    Prepare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPlan {
    /// Seconds from now until contact.
    pub time: f64,
    pub mallet: MalletState,
    pub intent: ContactIntent,
    /// Puck `(x, y, vx, vy)` right after contact.
    pub post_contact: PuckVector,
    pub cost: f64,
}

/// Band of own-half x positions where contacts are planned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReachBand {
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for ReachBand {
    fn default() -> Self {
        Self { x_min: 0.15, x_max: 0.6 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DeflectionContext<'a> {
    pub model: &'a PiecewiseLinearPuckModel,
    pub geom: &'a TableGeometry,
    pub mallet_restitution: f64,
    pub band: ReachBand,
    pub max_mallet_speed: f64,
    pub horizon_steps: usize,
    /// Lateral speed asked for by the prepare heuristic.
    pub prepare_speed: f64,
}

/// Post-contact puck for a mallet whose contact normal is at `offset` (rad,
/// from +x) moving with `speed` along that normal.
pub fn deflect(puck: &PuckVector, offset: f64, speed: f64, geom: &TableGeometry, restitution: f64) -> (PuckVector, MalletState) {
    let n = Vector2::new(offset.cos(), offset.sin());
    let cd = geom.contact_distance();
    let mallet = MalletState { x: puck.x - cd * n.x, y: puck.y - cd * n.y, vx: speed * n.x, vy: speed * n.y };
    let state = PuckState { x: puck.x, y: puck.y, vx: puck.z, vy: puck.w, ..PuckState::default() };
    let out = resolve_mallet_contact(&state, &mallet, restitution, cd * (1.0 + CONTACT_SLACK), n).puck;
    (PuckVector::new(out.x, out.y, out.vx, out.vy), mallet)
}

/// Lateral target for a prepare contact: push toward the nearer side wall so
/// the reflection carries the puck back toward the centre line.
pub fn prepare_target_vy(puck: &PuckVector, geom: &TableGeometry, speed: f64) -> f64 {
    if puck.y.abs() < 0.25 * geom.half_width() {
        0.0
    } else {
        puck.y.signum() * speed
    }
}

/// Earliest time the predicted puck enters the reach band, with its belief.
pub fn contact_time(belief: &EkfBelief, ctx: &DeflectionContext) -> Result<(f64, EkfBelief), PlanningError> {
    if belief.mean.x < ctx.band.x_min {
        return Err(PlanningError::PastReach { x: belief.mean.x });
    }
    if belief.mean.x <= ctx.band.x_max {
        return Ok((0.0, *belief));
    }
    let roll = ekf_rollout(ctx.model, belief, &[], ctx.horizon_steps, ctx.geom);
    roll.beliefs
        .iter()
        .position(|b| b.mean.x <= ctx.band.x_max)
        .map(|k| ((k + 1) as f64 * ctx.model.dt, roll.beliefs[k]))
        .ok_or(PlanningError::Unreachable)
}

pub fn plan_deflection<R: Rng + ?Sized>(
    belief: &EkfBelief,
    target_vy: f64,
    intent: ContactIntent,
    ctx: &DeflectionContext,
    sampler: &SamplerConfig,
    rng: &mut R,
) -> Result<ContactPlan, PlanningError> {
    let (time, at_contact) = contact_time(belief, ctx)?;
    let puck = at_contact.mean;
    let target = match intent {
        ContactIntent::Prepare => prepare_target_vy(&puck, ctx.geom, ctx.prepare_speed),
        _ => target_vy,
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let limit = ctx.max_mallet_speed;
    // The second coordinate spans only the speeds that actually touch the
    // puck at this offset, so the search never wanders a no-contact plateau.
    let speed_range = |offset: f64| {
        let closing = puck.z * offset.cos() + puck.w * offset.sin();
        (closing.clamp(-limit, limit), limit)
    };
    let cost_at = |offset: f64, speed: f64| {
        let (post, _) = deflect(&puck, offset, speed, ctx.geom, ctx.mallet_restitution);
        (post.w - target).abs()
    };
    let bounds = [(-half_pi, half_pi), (0.0, 1.0)];
    let result = sample_minimize(bounds, sampler, rng, |x| {
        let (lo, hi) = speed_range(x[0]);
        cost_at(x[0], lo + x[1] * (hi - lo))
    })
    .ok_or(PlanningError::NoFiniteCandidate)?;
    let offset = result.best[0];
    let (lo, hi) = speed_range(offset);
    let speed = polish_speed(lo + result.best[1] * (hi - lo), result.best_cost, (lo, hi), |s| cost_at(offset, s));
    let (post_contact, mallet) = deflect(&puck, offset, speed, ctx.geom, ctx.mallet_restitution);
    Ok(ContactPlan { time, mallet, intent, post_contact, cost: cost_at(offset, speed) })
}

/// Secant refinement of the mallet speed at a fixed offset. While the contact
/// holds, the lateral puck velocity is affine in mallet speed, so a couple of
/// steps land on the root. Returns the best speed seen.
fn polish_speed(speed: f64, cost: f64, (lo, hi): (f64, f64), eval: impl Fn(f64) -> f64) -> f64 {
    let (mut best, mut best_cost) = (speed, cost);
    if hi <= lo {
        return best;
    }
    let (mut s0, mut c0) = (speed, cost);
    let step = 1e-3 * (hi - lo);
    let mut s1 = if speed + step <= hi { speed + step } else { speed - step };
    for _ in 0..4 {
        let c1 = eval(s1);
        if c1 < best_cost {
            (best, best_cost) = (s1, c1);
        }
        // The cost is |residual| with unknown residual signs, so try the
        // secant root for both sign patterns and keep the better one.
        let slope_same = (c1 - c0) / (s1 - s0);
        let slope_flip = (c1 + c0) / (s1 - s0);
        let next = [slope_same, slope_flip]
            .map(|m| if m.abs() > 1e-12 { s1 - c1 / m } else { s1 })
            .into_iter()
            .map(|s| s.clamp(lo, hi))
            .map(|s| (s, eval(s)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((s1, c1));
        if next.1 < best_cost {
            (best, best_cost) = next;
        }
        if best_cost == 0.0 || (next.0 - s1).abs() < 1e-15 {
            break;
        }
        (s0, c0, s1) = (s1, c1, next.0);
    }
    best
}
