//! Identification of the arm tracking model from a recorded step response.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::blackbox::{blackbox_fit, BlackboxConfig, TraceRow};
use crate::kinematics::JointVector;
use crate::sim::arm::{step_arm, ArmTrackingModel, JointState};

/// Joint positions recorded while tracking a constant setpoint from rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub dt: f64,
    pub anchor: JointVector,
    pub start: JointVector,
    pub setpoint: JointVector,
    pub samples: Vec<JointVector>,
}

pub fn simulate_step_response(model: &ArmTrackingModel, anchor: &JointVector, start: &JointVector, setpoint: &JointVector, dt: f64, steps: usize) -> StepResponse {
    let target = JointState::at_rest(*setpoint);
    let mut state = JointState::at_rest(*start);
    let samples = (0..steps)
        .map(|_| {
            state = step_arm(model, &state, &target, anchor, dt);
            state.q
        })
        .collect();
    StepResponse { dt, anchor: *anchor, start: *start, setpoint: *setpoint, samples }
}

fn response_error(model: &ArmTrackingModel, data: &StepResponse) -> f64 {
    let sim = simulate_step_response(model, &data.anchor, &data.start, &data.setpoint, data.dt, data.samples.len());
    sim.samples.iter().zip(&data.samples).map(|(a, b)| (a - b).norm_squared()).sum::<f64>() / data.samples.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmFit {
    pub model: ArmTrackingModel,
    /// Mean squared joint error of the fitted response.
    pub residual: f64,
    pub evaluations: usize,
    pub trace: Vec<TraceRow>,
}

/// Search `ln tau` and `gain_scale` for the lag model that best reproduces `data`.
pub fn fit_arm_tracking<R: Rng + ?Sized>(data: &StepResponse, budget: usize, rng: &mut R) -> ArmFit {
    let cfg = BlackboxConfig { initial_sigma: 0.5, population: None, bounds: Some(vec![(1e-4f64.ln(), 1.0f64.ln()), (0.1, 2.0)]) };
    let to_model = |x: &[f64]| ArmTrackingModel::lag(x[0].exp(), x[1]);
    let result = blackbox_fit(|x| response_error(&to_model(x), data), &[0.02f64.ln(), 1.0], budget, &cfg, rng);
    ArmFit { model: to_model(&result.x), residual: result.value.unwrap_or(f64::INFINITY), evaluations: result.evaluations, trace: result.trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_lag_parameters() {
        let truth = ArmTrackingModel::lag(0.045, 0.93);
        let anchor = JointVector::zeros();
        let data = simulate_step_response(&truth, &anchor, &anchor, &JointVector::from_element(0.5), 1e-3, 300);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fit = fit_arm_tracking(&data, 1500, &mut rng);
        assert!((fit.model.tau / 0.045 - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.model.gain_scale / 0.93 - 1.0).abs() < 0.05, "{fit:?}");
    }
}
