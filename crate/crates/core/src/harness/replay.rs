//! JSON-Lines replay logs: a header line followed by one record per control step.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::env::EnvConfig;
use super::episode::command_flags;
use crate::metrics::{ConstraintSet, EpisodeMeter, PenaltyWeights};
use crate::sim::{Command, Event, Observation, Side, WorldState};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("replay I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("replay schema version {found} is not supported (expected {expected})")]
    Schema { found: u32, expected: u32 },
    #[error("replay has no header line")]
    MissingHeader,
    #[error("replay line {line} is unreadable ({reason}); last valid line is {last_valid}")]
    Corrupt { line: usize, last_valid: usize, reason: String },
    #[error("header config hash {stored} does not match the stored config ({computed})")]
    HashMismatch { stored: String, computed: String },
    #[error("replay encoding: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayHeader {
    pub schema_version: u32,
    pub config_hash: String,
    pub config: EnvConfig,
    pub seed: u64,
    pub agents: Vec<String>,
}

impl ReplayHeader {
    pub fn new(config: &EnvConfig, seed: u64, agents: Vec<String>) -> Self {
        Self { schema_version: SCHEMA_VERSION, config_hash: config.hash(), config: config.clone(), seed, agents }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub side: Side,
    pub observation: Observation,
    pub command: Command,
    pub compute_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub episode: usize,
    pub step: usize,
    /// State after the step.
    pub world: WorldState,
    pub agents: Vec<AgentRecord>,
    pub events: Vec<Event>,
}

pub fn replay_write(path: &Path, header: &ReplayHeader, records: &[ReplayRecord]) -> Result<(), ReplayError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Read and validate a replay. Line numbers in errors are 1-based.
pub fn replay_read(path: &Path) -> Result<(ReplayHeader, Vec<ReplayRecord>), ReplayError> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let first = lines.next().ok_or(ReplayError::MissingHeader)??;
    let raw: serde_json::Value = serde_json::from_str(&first).map_err(|e| ReplayError::Corrupt { line: 1, last_valid: 0, reason: e.to_string() })?;
    let found = raw.get("schema_version").and_then(|v| v.as_u64()).ok_or(ReplayError::MissingHeader)? as u32;
    if found != SCHEMA_VERSION {
        return Err(ReplayError::Schema { found, expected: SCHEMA_VERSION });
    }
    let header: ReplayHeader = serde_json::from_value(raw).map_err(|e| ReplayError::Corrupt { line: 1, last_valid: 0, reason: e.to_string() })?;
    let computed = header.config.hash();
    if computed != header.config_hash {
        return Err(ReplayError::HashMismatch { stored: header.config_hash, computed });
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let number = i + 2;
        let text = line?;
        let record = serde_json::from_str(&text).map_err(|e| ReplayError::Corrupt { line: number, last_valid: number - 1, reason: e.to_string() })?;
        records.push(record);
    }
    Ok((header, records))
}

/// Per-episode penalties recomputed from the logged commands and compute
/// times of `side`, ordered by episode index. Episodes that ended on an agent
/// error are not visible in the log and must be added separately.
pub fn recompute_penalties(header: &ReplayHeader, records: &[ReplayRecord], side: Side, weights: &PenaltyWeights) -> Vec<(usize, f64)> {
    let world = &header.config.world;
    let set = ConstraintSet::new(&world.robot, &world.table);
    let mut out: Vec<(usize, EpisodeMeter)> = Vec::new();
    for r in records {
        if out.last().is_none_or(|(e, _)| *e != r.episode) {
            out.push((r.episode, EpisodeMeter::default()));
        }
        let meter = &mut out.last_mut().expect("pushed above").1;
        for a in r.agents.iter().filter(|a| a.side == side) {
            meter.record_step(command_flags(&a.command, &world.robot, &set), a.compute_time);
        }
    }
    out.into_iter().map(|(e, m)| (e, m.finish(weights).total())).collect()
}
