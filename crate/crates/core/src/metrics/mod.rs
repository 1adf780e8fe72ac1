//! Constraint checks, penalty accounting, task success and match scoring.

pub mod constraints;
pub mod penalty;
pub mod report;
pub mod scoring;
pub mod success;

pub use constraints::{check_constraints, ConstraintSet, ViolationFlags};
pub use penalty::{accumulate_episode, ComputeBands, EpisodeMeter, EpisodePenalty, PenaltyLedger, PenaltyWeights};
pub use scoring::{
    classify_deployability, classify_with, qualifying_rank, score_match, standings, Deployability, DeployabilityThresholds,
    LeaderboardRow, MatchRecord, MatchRules, MatchScore, MatchTally, Outcome, OutcomePoints, ScoreRow, Stage, Standing,
    TaskWeights, WinnerRule,
};
pub use success::{judge_task, EpisodeTrace, Region, SuccessCriteria, Task};
