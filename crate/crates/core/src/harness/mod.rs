//! Episode lifecycle, runners for the three evaluation stages, and replay logs.
pub mod env;
pub mod episode;
pub mod replay;
pub mod runners;
pub mod seed;
pub mod tune;

use thiserror::Error;

use crate::policies::{Agent, AgentError};
use crate::sim::world::WorldConfigError;

pub use env::{changed_factors, EnvConfig, Factor, OpponentPattern, Profile, ResolvedEnv};
pub use episode::{control_step, initial_puck, run_episode, run_episode_logged, ComputeStats, EpisodeResult, PatternAgent};
pub use replay::{recompute_penalties, replay_read, replay_write, AgentRecord, ReplayError, ReplayHeader, ReplayRecord, SCHEMA_VERSION};
pub use runners::{
    penalty_episode_count, round_robin_pairs, run_ablation, run_batch, run_game, run_qualifying, run_tournament, AblationColumn, AblationResult, Entrant,
    GameResult, QualifyingResult, TournamentOptions, TournamentResult,
};
pub use seed::derive_seed;
pub use tune::{tune_rl3_hit, TuneConfig, TuneResult};

/// Builds a fresh agent from a seed.
pub type AgentFactory = dyn Fn(u64) -> Result<Box<dyn Agent>, AgentError> + Sync;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldConfigError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("at least one episode per task is required")]
    NoEpisodes,
    #[error("a tournament needs at least two entrants, got {0}")]
    TooFewEntrants(usize),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}
