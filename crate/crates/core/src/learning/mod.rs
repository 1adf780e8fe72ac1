//! Rewards, parameter-space optimizers, system identification and the
//! curriculum sampler.
pub mod blackbox;
pub mod curriculum;
pub mod pgpe;
pub mod rewards;
pub mod sysid;

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::policies::Rl3Task;

pub use blackbox::{blackbox_fit, BlackboxConfig, BlackboxResult, TraceRow};
pub use curriculum::{curriculum_sample, CurriculumState, Level, LevelRanges, SwitchWindow};
pub use pgpe::{pgpe_update, PgpeState};
pub use rewards::{
    reward_airhockit, reward_rl3_hit, reward_spacer, AhRewardTask, EventFlags, GameEvent, ShotTriangle, StepObservation, TransitionRecord, TriangleRewardParams,
};
pub use sysid::{fit_arm_tracking, simulate_step_response, ArmFit, StepResponse};

#[derive(Debug, Error)]
pub enum LearningError {
    #[error("unknown reward task `{0}`")]
    UnknownTask(String),
    #[error("expected {expected} parameters, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("search standard deviations must be positive")]
    NonPositiveSigma,
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("no curriculum is defined for task {0:?}")]
    NoCurriculum(Rl3Task),
    #[error("trace output: {0}")]
    Csv(#[from] csv::Error),
}

/// Write optimizer or tuning rows as CSV with a header.
pub fn write_trace_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), LearningError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
