use serde::{Deserialize, Serialize};

use crate::kinematics::JointVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackingMode {
    Ideal,
    FirstOrderLag,
}

/// Joint-level setpoint tracking. In lag mode each joint follows
/// `anchor + gain_scale·(q_s − anchor)` through a first-order filter with
/// time constant `tau`; the anchor is the home configuration, which keeps
/// `tau` and `gain_scale` separately identifiable from a step response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmTrackingModel {
    pub mode: TrackingMode,
    pub tau: f64,
    pub gain_scale: f64,
}

impl Default for ArmTrackingModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ArmTrackingModel {
    pub fn ideal() -> Self {
        Self { mode: TrackingMode::Ideal, tau: 0.01, gain_scale: 1.0 }
    }

    pub fn lag(tau: f64, gain_scale: f64) -> Self {
        Self { mode: TrackingMode::FirstOrderLag, tau, gain_scale }
    }

    pub fn is_valid(&self) -> bool {
        self.mode == TrackingMode::Ideal || (self.tau > 0.0 && self.gain_scale.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub q: JointVector,
    pub qdot: JointVector,
}

impl JointState {
    pub fn at_rest(q: JointVector) -> Self {
        Self { q, qdot: JointVector::zeros() }
    }
}

pub fn step_arm(
    model: &ArmTrackingModel,
    state: &JointState,
    setpoint: &JointState,
    anchor: &JointVector,
    dt: f64,
) -> JointState {
    assert!(dt > 0.0, "step_arm requires dt > 0");
    match model.mode {
        TrackingMode::Ideal => *setpoint,
        TrackingMode::FirstOrderLag => {
            let reference = anchor + (setpoint.q - anchor) * model.gain_scale;
            let decay = (-dt / model.tau).exp();
            let q = reference + (state.q - reference) * decay;
            let qdot = (reference - q) / model.tau;
            JointState { q, qdot }
        }
    }
}
