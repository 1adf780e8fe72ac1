//! Text, CSV and JSON renderings of leaderboards and standings.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use super::scoring::{Deployability, LeaderboardRow, MatchRecord, Standing};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("utf-8: {0}")]
    Utf8(#[from] std::string::FromUtf8Error),
    #[error("csv buffer: {0}")]
    Buffer(#[from] csv::IntoInnerError<csv::Writer<Vec<u8>>>),
}

pub fn level_name(level: Deployability) -> &'static str {
    match level {
        Deployability::Deployable => "Deployable",
        Deployability::Improvable => "Improvable",
        Deployability::NonDeployable => "Non-Deployable",
    }
}

pub fn leaderboard_text(rows: &[LeaderboardRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<4} {:<18} {:>7} {:>7} {:>7} {:>9} {:>6}", "#", "team", "hit%", "def%", "prep%", "penalty", "score");
    let mut current = None;
    for r in rows {
        if current != Some(r.level) {
            let _ = writeln!(out, "-- {} --", level_name(r.level));
            current = Some(r.level);
        }
        let _ = writeln!(
            out,
            "{:<4} {:<18} {:>7.1} {:>7.1} {:>7.1} {:>9.1} {:>6.1}",
            r.rank,
            r.team,
            100.0 * r.hit,
            100.0 * r.defend,
            100.0 * r.prepare,
            r.penalty,
            r.score
        );
    }
    out
}

pub fn standings_text(rows: &[Standing]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<18} {:>4} {:>4} {:>4} {:>6} {:>6} {:>9} {:>6}", "team", "W", "L", "D", "GF", "GA", "penalty", "pts");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<18} {:>4} {:>4} {:>4} {:>6} {:>6} {:>9.1} {:>6}",
            r.team, r.wins, r.losses, r.draws, r.goals_scored, r.goals_received, r.penalty, r.points
        );
    }
    out
}

pub fn matches_text(rows: &[MatchRecord]) -> String {
    let mut out = String::new();
    for m in rows {
        let s = &m.score;
        let _ = writeln!(
            out,
            "{} x {}  final {}-{}  goals {}-{}  penalty {:.1} / {:.1}",
            m.teams[0], m.teams[1], s.final_score[0], s.final_score[1], s.goals[0], s.goals[1], s.penalty[0], s.penalty[1]
        );
    }
    out
}

#[derive(Serialize)]
struct FlatMatch<'a> {
    home: &'a str,
    away: &'a str,
    final_home: u32,
    final_away: u32,
    goals_home: u32,
    goals_away: u32,
    faults_home: u32,
    faults_away: u32,
    penalty_home: f64,
    penalty_away: f64,
    points_home: u32,
    points_away: u32,
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn matches_csv(rows: &[MatchRecord]) -> Result<String, ReportError> {
    let flat: Vec<FlatMatch> = rows
        .iter()
        .map(|m| FlatMatch {
            home: &m.teams[0],
            away: &m.teams[1],
            final_home: m.score.final_score[0],
            final_away: m.score.final_score[1],
            goals_home: m.score.goals[0],
            goals_away: m.score.goals[1],
            faults_home: m.score.faults[0],
            faults_away: m.score.faults[1],
            penalty_home: m.score.penalty[0],
            penalty_away: m.score.penalty[1],
            points_home: m.score.points[0],
            points_away: m.score.points[1],
        })
        .collect();
    to_csv(&flat)
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, ReportError> {
    Ok(serde_json::to_string_pretty(value)?)
}
