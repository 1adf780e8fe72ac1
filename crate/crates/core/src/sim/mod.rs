//! The 1 kHz simulator: puck physics, arm tracking, command interpolation and
//! the optional safety layer.

pub mod arm;
pub mod geometry;
pub mod interpolation;
pub mod puck;
pub mod safety;
pub mod world;

pub use arm::{step_arm, ArmTrackingModel, JointState, TrackingMode};
pub use geometry::{Side, TableGeometry};
pub use interpolation::{interpolate_command, Command, InterpolationMode, SetpointSample};
pub use puck::{resolve_mallet_contact, step_puck, MalletState, PuckParams, PuckState};
pub use world::{step_match, Event, Observation, World, WorldConfig, WorldState};
