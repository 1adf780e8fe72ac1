//! Task-space mallet targets mapped to joint commands through the damped
//! pseudo-inverse of the Jacobian.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::kinematics::{forward_kinematics, ik_step_with, IkOptions, JointVector, RobotSpec};
use crate::sim::interpolation::CONTROL_DT;
use crate::sim::{Command, InterpolationMode, TableGeometry};

/// Relative margin kept below velocity limits so commands at the clip pass
/// the strict limit check.
pub const VELOCITY_MARGIN: f64 = 1e-6;

/// Normalised absolute mallet target; each component is clamped to [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpaceAction([f64; 2]);

impl TaskSpaceAction {
    pub fn new(ax: f64, ay: f64) -> Self {
        Self([ax.clamp(-1.0, 1.0), ay.clamp(-1.0, 1.0)])
    }

    pub fn components(&self) -> [f64; 2] {
        self.0
    }
}

/// Box of mallet targets: the agent's half of the table inside the mallet
/// workspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionWorkspace {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl ActionWorkspace {
    pub fn from_geometry(geom: &TableGeometry) -> Self {
        Self { x_min: geom.ee_x_min, x_max: 0.5 * geom.length, y_min: geom.ee_y_min, y_max: geom.ee_y_max }
    }

    pub fn denormalize(&self, a: &TaskSpaceAction) -> Vector2<f64> {
        let [ax, ay] = a.components();
        Vector2::new(
            self.x_min + 0.5 * (ax + 1.0) * (self.x_max - self.x_min),
            self.y_min + 0.5 * (ay + 1.0) * (self.y_max - self.y_min),
        )
    }

    pub fn normalize(&self, p: &Vector2<f64>) -> TaskSpaceAction {
        TaskSpaceAction::new(
            2.0 * (p.x - self.x_min) / (self.x_max - self.x_min) - 1.0,
            2.0 * (p.y - self.y_min) / (self.y_max - self.y_min) - 1.0,
        )
    }

    pub fn clamp(&self, p: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(p.x.clamp(self.x_min, self.x_max), p.y.clamp(self.y_min, self.y_max))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskCommand {
    pub command: Command,
    pub dq: JointVector,
    /// Some joint was held at its velocity limit.
    pub clipped: bool,
}

/// One control step toward `target` with the end-effector height pinned to
/// the table. Unreachable targets give the largest feasible step.
pub fn track_target(target: &Vector2<f64>, q: &JointVector, spec: &RobotSpec, geom: &TableGeometry, opts: &IkOptions) -> TaskCommand {
    let ee = forward_kinematics(spec, q).ee;
    let dx = Vector3::new(target.x - ee.x, target.y - ee.y, geom.z_table - ee.z);
    let step = ik_step_with(spec, q, &dx, CONTROL_DT, opts);
    let mut dq = step.dq;
    let mut clipped = false;
    for j in 0..dq.len() {
        let lim = spec.qdot_limit[j] * CONTROL_DT * (1.0 - VELOCITY_MARGIN);
        if dq[j].abs() >= lim {
            dq[j] = dq[j].signum() * lim;
            clipped = true;
        }
        // Stay strictly inside the position box.
        let span = spec.q_upper[j] - spec.q_lower[j];
        let lo = spec.q_lower[j] + VELOCITY_MARGIN * span;
        let hi = spec.q_upper[j] - VELOCITY_MARGIN * span;
        let next = (q[j] + dq[j]).clamp(lo.min(q[j]), hi.max(q[j]));
        dq[j] = next - q[j];
    }
    let qdot = dq / CONTROL_DT;
    TaskCommand { command: Command::pos_vel(InterpolationMode::PosvelLinear, q + dq, qdot), dq, clipped }
}

pub fn map_task_action(a: &TaskSpaceAction, q: &JointVector, spec: &RobotSpec, geom: &TableGeometry) -> Command {
    let target = ActionWorkspace::from_geometry(geom).denormalize(a);
    track_target(&target, q, spec, geom, &IkOptions::default()).command
}
