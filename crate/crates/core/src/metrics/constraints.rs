use serde::{Deserialize, Serialize};

use crate::kinematics::{FramePoses, JointVector, RobotSpec, DOF};
use crate::sim::TableGeometry;

/// Safety constraints on one commanded configuration. Every bound is strict:
/// touching a limit counts as a violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub q_lower: JointVector,
    pub q_upper: JointVector,
    pub qdot_limit: JointVector,
    pub ee_x_min: f64,
    pub ee_y_min: f64,
    pub ee_y_max: f64,
    pub z_table: f64,
    pub z_tolerance: f64,
    pub link_min_z: f64,
}

impl ConstraintSet {
    pub fn new(spec: &RobotSpec, geom: &TableGeometry) -> Self {
        Self {
            q_lower: spec.q_lower,
            q_upper: spec.q_upper,
            qdot_limit: spec.qdot_limit,
            ee_x_min: geom.ee_x_min,
            ee_y_min: geom.ee_y_min,
            ee_y_max: geom.ee_y_max,
            z_table: geom.z_table,
            z_tolerance: geom.z_tolerance,
            link_min_z: 0.25,
        }
    }

    /// Scalar constraint counts per group: joint position, joint velocity, EE, link.
    pub const DIMENSIONS: [usize; 4] = [2 * DOF, 2 * DOF, 5, 2];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ViolationFlags {
    pub joint_pos: bool,
    pub joint_vel: bool,
    pub ee: bool,
    pub link: bool,
}

impl ViolationFlags {
    pub fn any(&self) -> bool {
        self.joint_pos || self.joint_vel || self.ee || self.link
    }

    pub fn union(self, other: Self) -> Self {
        Self {
            joint_pos: self.joint_pos || other.joint_pos,
            joint_vel: self.joint_vel || other.joint_vel,
            ee: self.ee || other.ee,
            link: self.link || other.link,
        }
    }
}

pub fn check_constraints(q_cmd: &JointVector, qdot_cmd: &JointVector, poses: &FramePoses, set: &ConstraintSet) -> ViolationFlags {
    let joint_pos = (0..DOF).any(|j| !(set.q_lower[j] < q_cmd[j] && q_cmd[j] < set.q_upper[j]));
    let joint_vel = (0..DOF).any(|j| !(-set.qdot_limit[j] < qdot_cmd[j] && qdot_cmd[j] < set.qdot_limit[j]));
    let ee = poses.ee;
    let ee_ok = set.ee_x_min < ee.x
        && set.ee_y_min < ee.y
        && ee.y < set.ee_y_max
        && ee.z > set.z_table - set.z_tolerance
        && ee.z < set.z_table + set.z_tolerance;
    let link = !(poses.elbow_z > set.link_min_z && poses.wrist_z > set.link_min_z);
    ViolationFlags { joint_pos, joint_vel, ee: !ee_ok, link }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::forward_kinematics;
    use nalgebra::Vector3;

    fn nominal() -> (ConstraintSet, FramePoses, JointVector) {
        let spec = RobotSpec::iiwa14();
        let set = ConstraintSet::new(&spec, &TableGeometry::default());
        (set, forward_kinematics(&spec, &spec.q_init), spec.q_init)
    }

    #[test]
    fn home_pose_is_clean() {
        let (set, poses, q) = nominal();
        assert!(!check_constraints(&q, &JointVector::zeros(), &poses, &set).any());
    }

    #[test]
    fn low_elbow_flags_link() {
        let (set, mut poses, q) = nominal();
        poses.elbow_z = 0.20;
        let flags = check_constraints(&q, &JointVector::zeros(), &poses, &set);
        assert_eq!(flags, ViolationFlags { link: true, ..Default::default() });
    }

    #[test]
    fn height_band_is_two_centimetres() {
        let (set, mut poses, q) = nominal();
        poses.ee = Vector3::new(poses.ee.x, poses.ee.y, set.z_table + 0.03);
        assert!(check_constraints(&q, &JointVector::zeros(), &poses, &set).ee);
        poses.ee.z = set.z_table + 0.019;
        assert!(!check_constraints(&q, &JointVector::zeros(), &poses, &set).ee);
    }

    #[test]
    fn limits_are_strict() {
        let (set, poses, mut q) = nominal();
        q[0] = set.q_upper[0];
        assert!(check_constraints(&q, &JointVector::zeros(), &poses, &set).joint_pos);
        let (_, _, q) = nominal();
        let mut qdot = JointVector::zeros();
        qdot[3] = -set.qdot_limit[3];
        assert!(check_constraints(&q, &qdot, &poses, &set).joint_vel);
    }
}
