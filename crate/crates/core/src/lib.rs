pub mod estimation;
pub mod harness;
pub mod kinematics;
pub mod learning;
pub mod metrics;
pub mod planning;
pub mod policies;
pub mod sim;
