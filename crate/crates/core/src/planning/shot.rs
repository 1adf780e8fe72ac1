use nalgebra::{Matrix4, Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::sampler::{sample_minimize, SamplerConfig};
use super::{PlanningError, CONTACT_SLACK};
use crate::estimation::piecewise::{classify_contact_mode, ekf_rollout, EkfBelief, PiecewiseLinearPuckModel, PuckVector};
use crate::estimation::ContactMode;
use crate::sim::puck::resolve_mallet_contact;
use crate::sim::{MalletState, PuckState, TableGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShotCostWeights {
    pub w_goal: f64,
    pub w_vel: f64,
    pub low_prob_threshold: f64,
    pub low_prob_penalty: f64,
}

impl Default for ShotCostWeights {
    fn default() -> Self {
        Self { w_goal: 1.0, w_vel: 0.2, low_prob_threshold: 0.5, low_prob_penalty: 1.0 }
    }
}

impl ShotCostWeights {
    pub fn is_valid(&self) -> bool {
        [self.w_goal, self.w_vel, self.low_prob_threshold, self.low_prob_penalty].iter().all(|w| *w >= 0.0)
    }
}

/// Everything a shot evaluation needs besides the angle and the belief.
#[derive(Debug, Clone, Copy)]
pub struct ShotContext<'a> {
    pub model: &'a PiecewiseLinearPuckModel,
    pub geom: &'a TableGeometry,
    pub mallet_restitution: f64,
    /// Mallet speed along the shooting direction at contact.
    pub mallet_speed: f64,
    /// Maximum rollout length in model steps.
    pub horizon_steps: usize,
    /// Largest |angle| searched (rad).
    pub angle_limit: f64,
    pub rollouts: usize,
}

impl ShotContext<'_> {
    pub fn shooting_direction(angle: f64) -> Vector2<f64> {
        Vector2::new(angle.cos(), angle.sin())
    }

    /// Puck state right after a contact that shoots it along `angle`.
    pub fn contact(&self, puck: &PuckVector, angle: f64) -> (PuckVector, MalletState) {
        let dir = Self::shooting_direction(angle);
        let cd = self.geom.contact_distance();
        let mallet = MalletState {
            x: puck.x - cd * dir.x,
            y: puck.y - cd * dir.y,
            vx: self.mallet_speed * dir.x,
            vy: self.mallet_speed * dir.y,
        };
        let state = PuckState { x: puck.x, y: puck.y, vx: puck.z, vy: puck.w, ..PuckState::default() };
        let out = resolve_mallet_contact(&state, &mallet, self.mallet_restitution, cd * (1.0 + CONTACT_SLACK), dir).puck;
        (PuckVector::new(out.x, out.y, out.vx, out.vy), mallet)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotEstimate {
    pub goal_probability: f64,
    /// Mean goal-line speed over scoring rollouts, zero when none scored.
    pub goal_speed: f64,
    pub cost: f64,
}

fn psd_sqrt(m: &Matrix4<f64>) -> Option<Matrix4<f64>> {
    if m.iter().all(|v| *v == 0.0) {
        return None;
    }
    let eig = m.symmetric_eigen();
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Some(eig.eigenvectors * Matrix4::from_diagonal(&root))
}

fn noise<R: Rng + ?Sized>(root: &Option<Matrix4<f64>>, rng: &mut R) -> Vector4<f64> {
    match root {
        Some(r) => r * Vector4::from_fn(|_, _| rng.sample(StandardNormal)),
        None => Vector4::zeros(),
    }
}

/// Goal-line speed if the free path from `s` enters the far goal, else `None`.
fn free_path_outcome<R: Rng + ?Sized>(
    ctx: &ShotContext,
    mut s: PuckVector,
    roots: &[Option<Matrix4<f64>>; 3],
    rng: &mut R,
) -> Option<f64> {
    let far = ctx.geom.length - ctx.geom.puck_radius;
    for _ in 0..ctx.horizon_steps {
        let mode = classify_contact_mode(&s, &[], ctx.geom, ctx.model.dt);
        let idx = match mode {
            ContactMode::Free => 0,
            ContactMode::Wall => 1,
            ContactMode::Mallet => 2,
        };
        s = ctx.model.propagate(mode, &s, &Vector4::zeros()).0 + noise(&roots[idx], rng);
        if s.x >= far {
            return (s.y.abs() < ctx.geom.goal_mouth_limit()).then(|| Vector2::new(s.z, s.w).norm());
        }
        if s.x <= ctx.geom.puck_radius {
            return None;
        }
    }
    None
}

/// Monte Carlo estimate of the shot cost for `angle` from the contact-time
/// belief. Rollouts use the random stream of `seed`, so all angles evaluated
/// with one seed share their noise draws.
pub fn shot_cost(angle: f64, belief: &EkfBelief, ctx: &ShotContext, weights: &ShotCostWeights, seed: u64) -> ShotEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let roots = [psd_sqrt(&ctx.model.free.sigma), psd_sqrt(&ctx.model.wall.sigma), psd_sqrt(&ctx.model.mallet.sigma)];
    let start_root = psd_sqrt(&belief.cov);
    let rollouts = ctx.rollouts.max(1);
    let (mut goals, mut speed_sum) = (0usize, 0.0);
    for _ in 0..rollouts {
        let pre = belief.mean + noise(&start_root, &mut rng);
        let (post, _) = ctx.contact(&pre, angle);
        if let Some(speed) = free_path_outcome(ctx, post, &roots, &mut rng) {
            goals += 1;
            speed_sum += speed;
        }
    }
    let p = goals as f64 / rollouts as f64;
    let speed = if goals > 0 { speed_sum / goals as f64 } else { 0.0 };
    let penalty = if p < weights.low_prob_threshold { weights.low_prob_penalty } else { 0.0 };
    ShotEstimate { goal_probability: p, goal_speed: speed, cost: -weights.w_goal * p - weights.w_vel * speed + penalty }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotPlan {
    pub angle: f64,
    pub estimate: ShotEstimate,
    /// Predicted puck belief at the contact time.
    pub contact_belief: EkfBelief,
    pub mallet: MalletState,
    /// Lowest cost among all sampled candidates.
    pub sampled_min: f64,
}

/// Predicted belief after `t_contact` seconds of free sliding.
pub fn predict_belief(belief: &EkfBelief, t_contact: f64, ctx: &ShotContext) -> EkfBelief {
    let steps = (t_contact / ctx.model.dt).round().max(0.0) as usize;
    if steps == 0 {
        return *belief;
    }
    ekf_rollout(ctx.model, belief, &[], steps, ctx.geom).beliefs.last().copied().unwrap_or(*belief)
}

pub fn plan_shot<R: Rng + ?Sized>(
    belief: &EkfBelief,
    t_contact: f64,
    ctx: &ShotContext,
    sampler: &SamplerConfig,
    weights: &ShotCostWeights,
    rng: &mut R,
) -> Result<ShotPlan, PlanningError> {
    let at_contact = predict_belief(belief, t_contact, ctx);
    let seed: u64 = rng.random();
    let ctx = ShotContext { rollouts: sampler.rollouts.max(ctx.rollouts), ..*ctx };
    let result = sample_minimize([(-ctx.angle_limit, ctx.angle_limit)], sampler, rng, |x| {
        shot_cost(x[0], &at_contact, &ctx, weights, seed).cost
    })
    .ok_or(PlanningError::NoFiniteCandidate)?;
    let angle = result.best[0];
    let estimate = shot_cost(angle, &at_contact, &ctx, weights, seed);
    let (_, mallet) = ctx.contact(&at_contact.mean, angle);
    Ok(ShotPlan { angle, estimate, contact_belief: at_contact, mallet, sampled_min: result.best_cost })
}
