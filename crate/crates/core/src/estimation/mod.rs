//! Observation noise, model mismatch, puck state estimation and the
//! piecewise-linear puck model.

pub mod kalman;
pub mod noise;
pub mod piecewise;

pub use kalman::{kalman_step, KalmanError, KalmanState};
pub use noise::{corrupt_observation, perturb_model, LossProcess, MismatchConfig, NoiseConfig, ObservationCorruptor};
pub use piecewise::{
    classify_contact_mode, ekf_rollout, fit_piecewise_model, ContactMode, EkfBelief, ModelError, PiecewiseLinearPuckModel,
    Transition,
};
