//! Setpoint extension and table-height correction applied between the agent
//! and the interpolator.

use nalgebra::Vector3;

use super::geometry::TableGeometry;
use super::interpolation::{interpolate_command, Command, InterpolationMode, SetpointSample, CONTROL_DT, SAMPLES_PER_TICK, SIM_DT};
use crate::kinematics::{forward_kinematics, ik_step_with, jacobian, IkOptions, JointVector, RobotSpec, DOF};

pub const EXTENSION_MS: usize = 100;

/// Hermite segment from `current` to `action` over one control tick, then a
/// constant-velocity continuation up to 100 ms. Sample `k` is at `k + 1` ms.
pub fn safety_extend_trajectory(current: &SetpointSample, action_q: &JointVector, action_qdot: &JointVector) -> Vec<SetpointSample> {
    let cmd = Command::pos_vel(InterpolationMode::PosvelCubic, *action_q, *action_qdot);
    let start = SetpointSample { qddot: JointVector::zeros(), ..*current };
    let mut out = interpolate_command(&start, &cmd, SAMPLES_PER_TICK).expect("cubic command carries velocity");
    for k in SAMPLES_PER_TICK + 1..=EXTENSION_MS {
        let dt = (k - SAMPLES_PER_TICK) as f64 * SIM_DT;
        out.push(SetpointSample { q: action_q + action_qdot * dt, qdot: *action_qdot, qddot: JointVector::zeros() });
    }
    out
}

/// Executes a 100 ms extended trajectory; a new action replaces the tail
/// starting from the sample currently being tracked.
#[derive(Debug, Clone, PartialEq)]
pub struct SetpointBuffer {
    samples: Vec<SetpointSample>,
    cursor: usize,
    last: SetpointSample,
}

impl SetpointBuffer {
    pub fn new(start: SetpointSample) -> Self {
        Self { samples: Vec::new(), cursor: 0, last: start }
    }

    pub fn push_action(&mut self, q: &JointVector, qdot: &JointVector) {
        self.samples = safety_extend_trajectory(&self.last, q, qdot);
        self.cursor = 0;
    }

    /// Next 1 ms setpoint. Past the end of the extension the last sample is held.
    pub fn next(&mut self) -> SetpointSample {
        if let Some(s) = self.samples.get(self.cursor) {
            self.cursor += 1;
            self.last = *s;
        } else {
            self.last.qdot = JointVector::zeros();
            self.last.qddot = JointVector::zeros();
        }
        self.last
    }

    pub fn remaining(&self) -> usize {
        self.samples.len().saturating_sub(self.cursor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightCorrection {
    pub command: Command,
    pub unsafe_command: bool,
}

const CORRECTION_ITERS: usize = 8;
/// Height errors below this are left alone.
const HEIGHT_DEADBAND: f64 = 1e-6;
/// Relative gap kept below each joint velocity limit by the vertical fix.
const VELOCITY_FIX_MARGIN: f64 = 1e-6;

/// Pull the commanded end-effector back onto the table plane with vertical
/// IK steps. The cumulative change per joint is limited to what the joint can
/// travel in one control tick, and the corrected command must remain reachable
/// from `q_current` within that tick; otherwise it is marked unsafe.
pub fn safety_height_correct(spec: &RobotSpec, q_current: &JointVector, cmd: &Command, geom: &TableGeometry) -> HeightCorrection {
    let budget = spec.qdot_limit * CONTROL_DT;
    let opts = IkOptions::default();
    let mut q = cmd.q;
    for _ in 0..CORRECTION_ITERS {
        let dz = geom.z_table - forward_kinematics(spec, &q).ee.z;
        if dz.abs() < HEIGHT_DEADBAND {
            break;
        }
        let step = ik_step_with(spec, &q, &Vector3::new(0.0, 0.0, dz), CONTROL_DT, &opts);
        let proposed = q + step.dq;
        q = JointVector::from_fn(|j, _| proposed[j].clamp(cmd.q[j] - budget[j], cmd.q[j] + budget[j]));
    }
    let residual = (forward_kinematics(spec, &q).ee.z - geom.z_table).abs();

    let mut out = cmd.clone();
    out.q = q;
    if let Some(qdot) = cmd.qdot {
        let vz = (jacobian(spec, &q) * qdot).z;
        if vz != 0.0 {
            let fix = ik_step_with(spec, &q, &Vector3::new(0.0, 0.0, -vz * CONTROL_DT), CONTROL_DT, &opts);
            // The fix may not push a joint past its velocity limit unless the
            // original command already did.
            let fixed = qdot + fix.dq / CONTROL_DT;
            out.qdot = Some(JointVector::from_fn(|j, _| {
                let bound = qdot[j].abs().max(spec.qdot_limit[j] * (1.0 - VELOCITY_FIX_MARGIN));
                fixed[j].clamp(-bound, bound)
            }));
        }
    }
    let reachable = (0..DOF).all(|j| (q[j] - q_current[j]).abs() <= spec.qdot_limit[j] * CONTROL_DT * (1.0 + 1e-9));
    HeightCorrection { command: out, unsafe_command: residual > geom.z_tolerance || !reachable }
}
