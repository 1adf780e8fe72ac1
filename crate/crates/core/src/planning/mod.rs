//! Sampling-based contact planning: shooting angles, deflections and the
//! mallet trajectories that realise them.

pub mod deflection;
pub mod sampler;
pub mod shot;
pub mod trajectory;

use thiserror::Error;

pub use deflection::{plan_deflection, ContactIntent, ContactPlan, DeflectionContext, ReachBand};
pub use sampler::SamplerConfig;
pub use shot::{plan_shot, shot_cost, ShotContext, ShotCostWeights, ShotEstimate, ShotPlan};
pub use trajectory::{plan_mallet_trajectory, MalletSample, MalletTrajectory, TrajectoryParams};

/// Relative slack on the contact distance when a planned mallet is placed
/// exactly touching the puck, so rounding cannot turn the contact into a miss.
pub(crate) const CONTACT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanningError {
    #[error("no candidate had a finite cost")]
    NoFiniteCandidate,
    #[error("puck at x = {x:.3} is already past the reach band")]
    PastReach { x: f64 },
    #[error("puck does not enter the reach band within the horizon")]
    Unreachable,
    #[error("contact point ({x:.3}, {y:.3}) lies outside the mallet workspace")]
    ContactOutOfBounds { x: f64, y: f64 },
    #[error("every sampled trajectory leaves the mallet workspace")]
    NoInBoundsTrajectory,
}
