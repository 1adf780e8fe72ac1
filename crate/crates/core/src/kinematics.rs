//! Kinematic model of the 7-DoF arm.
//!
//! The chain is a list of revolute joints, each described by a fixed
//! translation from the previous joint frame followed by a rotation about a
//! local axis. Everything here is a pure function of `(RobotSpec, q)`.
//!
//! Frames: every robot is described in its *own side* frame, where the own
//! goal line sits at `x = 0`, the table centre line at `y = 0`, and the robot
//! base is mounted behind the goal line. The world mirrors the second robot.

use std::path::Path;

use nalgebra::{Matrix3, Rotation3, SMatrix, SVector, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DOF: usize = 7;

pub type JointVector = SVector<f64, DOF>;
pub type Jacobian = SMatrix<f64, 3, DOF>;

/// Default regularisation added to `J Jᵀ` in the damped pseudo-inverse.
pub const DEFAULT_DAMPING: f64 = 1e-3;
/// Default weight on the vertical task-space row.
pub const DEFAULT_Z_WEIGHT: f64 = 10.0;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("joint {joint}: lower limit {lower} is not below upper limit {upper}")]
    InvertedLimits { joint: usize, lower: f64, upper: f64 },
    #[error("joint {joint}: velocity limit {limit} must be positive")]
    NonPositiveVelocityLimit { joint: usize, limit: f64 },
    #[error("joint {joint}: initial position {value} outside limits")]
    InitOutsideLimits { joint: usize, value: f64 },
    #[error("joint {joint}: rotation axis has zero length")]
    ZeroAxis { joint: usize },
    #[error("frame index {0} is out of range")]
    BadFrameIndex(usize),
    #[error("reading robot spec: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing robot spec: {0}")]
    Parse(#[from] toml::de::Error),
}

/// One revolute joint: translate by `offset` in the parent frame, then rotate
/// about `axis` (expressed in the translated frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointFrame {
    pub offset: [f64; 3],
    pub axis: [f64; 3],
}

impl JointFrame {
    pub const fn new(offset: [f64; 3], axis: [f64; 3]) -> Self {
        Self { offset, axis }
    }
}

/// Planar mounting of the robot base: translation plus yaw about world z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasePose {
    pub translation: [f64; 3],
    pub yaw: f64,
}

impl Default for BasePose {
    fn default() -> Self {
        // Table centre lands at x = 1.51 in the base frame.
        Self {
            translation: [-0.536, 0.0, 0.0],
            yaw: 0.0,
        }
    }
}

/// Limits, home configuration and kinematic chain of one arm.
///
/// Loadable from TOML; every key is optional and falls back to the nominal
/// KUKA LBR iiwa 14 geometry used by the challenge tables:
///
/// ```toml
/// q_upper = [2.967, 2.09, 2.967, 2.094, 2.967, 2.094, 3.054]
/// q_lower = [-2.967, -2.094, -2.967, -2.094, -2.967, -2.094, -3.054]
/// qdot_limit = [1.483, 1.483, 1.745, 1.308, 2.268, 2.356, 2.356]
/// q_init = [0.0, -0.196, 0.0, -1.8436, 0.0, 0.9704, 0.0]
/// ee_offset = [0.0, 0.0, 0.584991]
/// elbow_joint = 3
/// wrist_joint = 5
/// [base]
/// translation = [-0.536, 0.0, 0.0]
/// yaw = 0.0
/// [[chain]]
/// offset = [0.0, 0.0, 0.1575]
/// axis = [0.0, 0.0, 1.0]
/// # ... seven entries in total
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotSpec {
    pub q_upper: JointVector,
    pub q_lower: JointVector,
    pub qdot_limit: JointVector,
    pub q_init: JointVector,
    pub chain: [JointFrame; DOF],
    /// Tool point (mallet centre) relative to the last joint frame.
    pub ee_offset: [f64; 3],
    pub base: BasePose,
    /// Index of the joint whose origin is reported as the elbow.
    pub elbow_joint: usize,
    /// Index of the joint whose origin is reported as the wrist.
    pub wrist_joint: usize,
}

impl Default for RobotSpec {
    fn default() -> Self {
        Self::iiwa14()
    }
}

impl RobotSpec {
    pub fn iiwa14() -> Self {
        let z = [0.0, 0.0, 1.0];
        let y = [0.0, 1.0, 0.0];
        let neg_y = [0.0, -1.0, 0.0];
        Self {
            q_upper: JointVector::from([2.967, 2.09, 2.967, 2.094, 2.967, 2.094, 3.054]),
            q_lower: JointVector::from([-2.967, -2.094, -2.967, -2.094, -2.967, -2.094, -3.054]),
            qdot_limit: JointVector::from([1.483, 1.483, 1.745, 1.308, 2.268, 2.356, 2.356]),
            q_init: JointVector::from([0.0, -0.1960, 0.0, -1.8436, 0.0, 0.9704, 0.0]),
            chain: [
                JointFrame::new([0.0, 0.0, 0.1575], z),
                JointFrame::new([0.0, 0.0, 0.2025], y),
                JointFrame::new([0.0, 0.0, 0.2045], z),
                JointFrame::new([0.0, 0.0, 0.2155], neg_y),
                JointFrame::new([0.0, 0.0, 0.1845], z),
                JointFrame::new([0.0, 0.0, 0.2155], y),
                JointFrame::new([0.0, 0.0, 0.0810], z),
            ],
            // Flange plus mallet rod; calibrated so q_init rests on the table plane.
            ee_offset: [0.0, 0.0, 0.584_991],
            base: BasePose::default(),
            elbow_joint: 3,
            wrist_joint: 5,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SpecError> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        for j in 0..DOF {
            let (lo, hi) = (self.q_lower[j], self.q_upper[j]);
            if !(lo < hi) {
                return Err(SpecError::InvertedLimits { joint: j, lower: lo, upper: hi });
            }
            if !(self.qdot_limit[j] > 0.0) {
                return Err(SpecError::NonPositiveVelocityLimit { joint: j, limit: self.qdot_limit[j] });
            }
            if self.q_init[j] < lo || self.q_init[j] > hi {
                return Err(SpecError::InitOutsideLimits { joint: j, value: self.q_init[j] });
            }
            if Vector3::from(self.chain[j].axis).norm() == 0.0 {
                return Err(SpecError::ZeroAxis { joint: j });
            }
        }
        for idx in [self.elbow_joint, self.wrist_joint] {
            if idx >= DOF {
                return Err(SpecError::BadFrameIndex(idx));
            }
        }
        Ok(())
    }
}

/// End-effector position plus the heights checked by the link constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePoses {
    pub ee: Vector3<f64>,
    pub elbow_z: f64,
    pub wrist_z: f64,
}

/// Joint origins and world-frame axes, reused by FK and the Jacobian.
struct ChainState {
    origins: [Vector3<f64>; DOF],
    axes: [Vector3<f64>; DOF],
    ee: Vector3<f64>,
}

fn walk_chain(spec: &RobotSpec, q: &JointVector) -> ChainState {
    let mut rot = Rotation3::from_axis_angle(&Vector3::z_axis(), spec.base.yaw);
    let mut pos = Vector3::from(spec.base.translation);
    let mut origins = [Vector3::zeros(); DOF];
    let mut axes = [Vector3::zeros(); DOF];
    for (j, frame) in spec.chain.iter().enumerate() {
        pos += rot * Vector3::from(frame.offset);
        let axis = Unit::new_normalize(Vector3::from(frame.axis));
        origins[j] = pos;
        axes[j] = rot * axis.into_inner();
        rot *= Rotation3::from_axis_angle(&axis, q[j]);
    }
    let ee = pos + rot * Vector3::from(spec.ee_offset);
    ChainState { origins, axes, ee }
}

pub fn forward_kinematics(spec: &RobotSpec, q: &JointVector) -> FramePoses {
    let chain = walk_chain(spec, q);
    FramePoses {
        ee: chain.ee,
        elbow_z: chain.origins[spec.elbow_joint].z,
        wrist_z: chain.origins[spec.wrist_joint].z,
    }
}

/// Linear-velocity Jacobian of the tool point, columns `axisᵢ × (p_ee − pᵢ)`.
pub fn jacobian(spec: &RobotSpec, q: &JointVector) -> Jacobian {
    let chain = walk_chain(spec, q);
    let mut jac = Jacobian::zeros();
    for j in 0..DOF {
        jac.set_column(j, &chain.axes[j].cross(&(chain.ee - chain.origins[j])));
    }
    jac
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    pub z_weight: f64,
    pub damping: f64,
    /// Gain of the null-space pull toward `posture`; zero disables it.
    pub posture_gain: f64,
    pub posture: Option<JointVector>,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            z_weight: DEFAULT_Z_WEIGHT,
            damping: DEFAULT_DAMPING,
            posture_gain: 0.0,
            posture: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkStep {
    pub dq: JointVector,
    /// Smallest weighted singular value fell below the damping scale.
    pub degenerate: bool,
    /// The raw solution was scaled down to respect velocity limits.
    pub saturated: bool,
}

pub fn ik_step(spec: &RobotSpec, q: &JointVector, dx: &Vector3<f64>, dt: f64, z_weight: f64) -> IkStep {
    ik_step_with(spec, q, dx, dt, &IkOptions { z_weight, ..IkOptions::default() })
}

/// Damped, z-weighted least-squares joint step for a task-space displacement,
/// scaled so no joint exceeds `qdot_limit · dt`.
pub fn ik_step_with(spec: &RobotSpec, q: &JointVector, dx: &Vector3<f64>, dt: f64, opts: &IkOptions) -> IkStep {
    assert!(dt > 0.0, "ik_step requires dt > 0");
    let weight = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, opts.z_weight.max(1.0)));
    let jw = weight * jacobian(spec, q);
    let gram = jw * jw.transpose();
    let eig = gram.symmetric_eigenvalues();
    let degenerate = eig.min() < opts.damping;
    let regularised = gram + Matrix3::identity() * opts.damping;
    // Regularised Gram matrix is SPD, so Cholesky cannot fail for damping > 0.
    let chol = regularised.cholesky().expect("damped Gram matrix is positive definite");
    let mut dq = jw.transpose() * chol.solve(&(weight * dx));

    if let (Some(posture), true) = (opts.posture, opts.posture_gain > 0.0) {
        let pinv = jw.transpose() * chol.inverse();
        let null = SMatrix::<f64, DOF, DOF>::identity() - pinv * jw;
        dq += null * ((posture - q) * opts.posture_gain);
    }

    let mut saturated = false;
    let mut worst = (0usize, 1.0);
    for j in 0..DOF {
        let ratio = dq[j].abs() / (spec.qdot_limit[j] * dt);
        if ratio > worst.1 {
            worst = (j, ratio);
        }
    }
    if worst.1 > 1.0 {
        saturated = true;
        dq /= worst.1;
        let j = worst.0;
        dq[j] = dq[j].signum() * spec.qdot_limit[j] * dt;
    }
    for j in 0..DOF {
        let lim = spec.qdot_limit[j] * dt;
        dq[j] = dq[j].clamp(-lim, lim);
    }
    IkStep { dq, degenerate, saturated }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampedCommand {
    pub q: JointVector,
    pub qdot: JointVector,
    pub clipped: bool,
}

/// Project a joint command into the position and velocity boxes.
pub fn clamp_joint_command(spec: &RobotSpec, q_cmd: &JointVector, qdot_cmd: &JointVector) -> ClampedCommand {
    let q = q_cmd.zip_zip_map(&spec.q_lower, &spec.q_upper, |v, lo, hi| v.clamp(lo, hi));
    let qdot = qdot_cmd.zip_map(&spec.qdot_limit, |v, lim| v.clamp(-lim, lim));
    let clipped = q != *q_cmd || qdot != *qdot_cmd;
    ClampedCommand { q, qdot, clipped }
}
