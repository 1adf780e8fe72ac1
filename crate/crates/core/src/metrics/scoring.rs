//! Deployability levels, qualifying leaderboard and tournament scoring.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sim::{Event, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Deployability {
    Deployable,
    Improvable,
    NonDeployable,
}

/// Upper DS bounds of the Deployable and Improvable levels (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeployabilityThresholds {
    pub deployable: f64,
    pub improvable: f64,
}

impl DeployabilityThresholds {
    pub const QUALIFYING: Self = Self { deployable: 500.0, improvable: 1500.0 };
    pub const TOURNAMENT: Self = Self { deployable: 45.0, improvable: 135.0 };

    /// Thresholds for a run of `episodes`, at 0.5 and 1.5 points per episode.
    pub fn for_episodes(episodes: usize) -> Self {
        let n = episodes as f64;
        Self { deployable: 0.5 * n, improvable: 1.5 * n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Qualifying,
    Tournament,
}

impl Stage {
    pub fn thresholds(self) -> DeployabilityThresholds {
        match self {
            Stage::Qualifying => DeployabilityThresholds::QUALIFYING,
            Stage::Tournament => DeployabilityThresholds::TOURNAMENT,
        }
    }
}

pub fn classify_with(ds: f64, t: &DeployabilityThresholds) -> Deployability {
    if ds <= t.deployable {
        Deployability::Deployable
    } else if ds <= t.improvable {
        Deployability::Improvable
    } else {
        Deployability::NonDeployable
    }
}

pub fn classify_deployability(ds: f64, stage: Stage) -> Deployability {
    classify_with(ds, &stage.thresholds())
}

/// Weights of the hit, defend and prepare success rates in the qualifying score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskWeights {
    pub hit: f64,
    pub defend: f64,
    pub prepare: f64,
}

impl Default for TaskWeights {
    fn default() -> Self {
        Self { hit: 0.4, defend: 0.4, prepare: 0.2 }
    }
}

impl TaskWeights {
    pub fn uniform() -> Self {
        Self { hit: 1.0 / 3.0, defend: 1.0 / 3.0, prepare: 1.0 / 3.0 }
    }
}

/// Success rates are fractions in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub team: String,
    pub hit: f64,
    pub defend: f64,
    pub prepare: f64,
    pub penalty: f64,
}

impl ScoreRow {
    pub fn score(&self, weights: &TaskWeights) -> f64 {
        100.0 * (weights.hit * self.hit + weights.defend * self.defend + weights.prepare * self.prepare)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub team: String,
    pub level: Deployability,
    pub hit: f64,
    pub defend: f64,
    pub prepare: f64,
    pub penalty: f64,
    pub score: f64,
}

/// Group by deployability level, then order by score within each group.
/// Ties keep input order.
pub fn qualifying_rank(rows: &[ScoreRow], thresholds: &DeployabilityThresholds, weights: &TaskWeights) -> Vec<LeaderboardRow> {
    let mut out: Vec<LeaderboardRow> = rows
        .iter()
        .map(|r| LeaderboardRow {
            rank: 0,
            team: r.team.clone(),
            level: classify_with(r.penalty, thresholds),
            hit: r.hit,
            defend: r.defend,
            prepare: r.prepare,
            penalty: r.penalty,
            score: r.score(weights),
        })
        .collect();
    out.sort_by(|a, b| a.level.cmp(&b.level).then(b.score.total_cmp(&a.score)));
    for (i, row) in out.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Win,
    Draw,
    Loss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomePoints {
    pub win: u32,
    pub draw: u32,
    pub loss: u32,
}

impl Default for OutcomePoints {
    fn default() -> Self {
        Self { win: 3, draw: 1, loss: 0 }
    }
}

impl OutcomePoints {
    pub fn of(&self, outcome: Outcome) -> u32 {
        match outcome {
            Outcome::Win => self.win,
            Outcome::Draw => self.draw,
            Outcome::Loss => self.loss,
        }
    }
}

/// How the match winner is decided.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WinnerRule {
    /// Higher final score wins.
    ScoreOnly,
    /// A side whose match penalty exceeds `max_penalty` loses; if both exceed
    /// it the match is drawn; otherwise the higher final score wins.
    DeployableFirst { max_penalty: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchRules {
    /// Faults by one side that convert into one point for the opponent.
    pub faults_per_point: u32,
    pub winner: WinnerRule,
    pub points: OutcomePoints,
}

impl Default for MatchRules {
    fn default() -> Self {
        Self {
            faults_per_point: 3,
            winner: WinnerRule::DeployableFirst { max_penalty: DeployabilityThresholds::TOURNAMENT.improvable },
            points: OutcomePoints::default(),
        }
    }
}

/// Raw per-side totals of one game.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchTally {
    pub goals: [u32; 2],
    pub faults: [u32; 2],
    pub penalty: [f64; 2],
}

impl MatchTally {
    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a Event>, penalty: [f64; 2]) -> Self {
        let mut tally = Self { penalty, ..Self::default() };
        for ev in events {
            match ev {
                Event::Goal { scorer, .. } => tally.goals[scorer.index()] += 1,
                Event::Fault { side, .. } => tally.faults[side.index()] += 1,
                _ => {}
            }
        }
        tally
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub goals: [u32; 2],
    pub faults: [u32; 2],
    /// Points awarded to each side from the opponent's faults.
    pub fault_points: [u32; 2],
    pub final_score: [u32; 2],
    pub penalty: [f64; 2],
    pub outcome: [Outcome; 2],
    pub points: [u32; 2],
}

pub fn score_match(tally: &MatchTally, rules: &MatchRules) -> MatchScore {
    let per = rules.faults_per_point.max(1);
    let fault_points = [tally.faults[1] / per, tally.faults[0] / per];
    let final_score = [tally.goals[0] + fault_points[0], tally.goals[1] + fault_points[1]];
    let by_score = match final_score[0].cmp(&final_score[1]) {
        std::cmp::Ordering::Greater => [Outcome::Win, Outcome::Loss],
        std::cmp::Ordering::Less => [Outcome::Loss, Outcome::Win],
        std::cmp::Ordering::Equal => [Outcome::Draw, Outcome::Draw],
    };
    let outcome = match rules.winner {
        WinnerRule::ScoreOnly => by_score,
        WinnerRule::DeployableFirst { max_penalty } => {
            match (tally.penalty[0] > max_penalty, tally.penalty[1] > max_penalty) {
                (true, true) => [Outcome::Draw, Outcome::Draw],
                (true, false) => [Outcome::Loss, Outcome::Win],
                (false, true) => [Outcome::Win, Outcome::Loss],
                (false, false) => by_score,
            }
        }
    };
    MatchScore {
        goals: tally.goals,
        faults: tally.faults,
        fault_points,
        final_score,
        penalty: tally.penalty,
        outcome,
        points: [rules.points.of(outcome[0]), rules.points.of(outcome[1])],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub teams: [String; 2],
    pub score: MatchScore,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Standing {
    pub team: String,
    pub wins: u32,
    pub losses: u32,
    pub draws: u32,
    pub goals_scored: u32,
    pub goals_received: u32,
    pub penalty: f64,
    pub points: u32,
}

/// Aggregate matches into standings ordered by points, then goal difference.
/// Teams appear in first-seen order before sorting so ties are stable.
pub fn standings(matches: &[MatchRecord]) -> Vec<Standing> {
    let mut order: Vec<String> = Vec::new();
    let mut table: BTreeMap<String, Standing> = BTreeMap::new();
    for m in matches {
        for side in Side::BOTH {
            let i = side.index();
            let o = side.opponent().index();
            let team = &m.teams[i];
            if !table.contains_key(team) {
                order.push(team.clone());
            }
            let row = table.entry(team.clone()).or_insert_with(|| Standing { team: team.clone(), ..Standing::default() });
            match m.score.outcome[i] {
                Outcome::Win => row.wins += 1,
                Outcome::Draw => row.draws += 1,
                Outcome::Loss => row.losses += 1,
            }
            row.goals_scored += m.score.goals[i];
            row.goals_received += m.score.goals[o];
            row.penalty += m.score.penalty[i];
            row.points += m.score.points[i];
        }
    }
    let mut rows: Vec<Standing> = order.into_iter().map(|t| table.remove(&t).expect("team recorded")).collect();
    rows.sort_by(|a, b| {
        b.points
            .cmp(&a.points)
            .then((b.goals_scored as i64 - b.goals_received as i64).cmp(&(a.goals_scored as i64 - a.goals_received as i64)))
    });
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_classification() {
        assert_eq!(classify_deployability(500.0, Stage::Qualifying), Deployability::Deployable);
        assert_eq!(classify_deployability(501.0, Stage::Qualifying), Deployability::Improvable);
        assert_eq!(classify_deployability(1500.0, Stage::Qualifying), Deployability::Improvable);
        assert_eq!(classify_deployability(1500.5, Stage::Qualifying), Deployability::NonDeployable);
        assert_eq!(classify_deployability(45.0, Stage::Tournament), Deployability::Deployable);
        assert_eq!(classify_deployability(136.0, Stage::Tournament), Deployability::NonDeployable);
        assert_eq!(DeployabilityThresholds::for_episodes(90), DeployabilityThresholds::TOURNAMENT);
        assert_eq!(DeployabilityThresholds::for_episodes(1000), DeployabilityThresholds::QUALIFYING);
    }

    #[test]
    fn simple_match() {
        let tally = MatchTally { goals: [2, 1], ..Default::default() };
        let s = score_match(&tally, &MatchRules::default());
        assert_eq!(s.final_score, [2, 1]);
        assert_eq!(s.points, [3, 0]);
    }

    #[test]
    fn faults_convert_to_opponent_points() {
        let tally = MatchTally { goals: [2, 12], faults: [33, 0], penalty: [28.0, 44.0] };
        let s = score_match(&tally, &MatchRules::default());
        assert_eq!(s.final_score, [2, 23]);
        assert_eq!(s.fault_points, [0, 11]);
    }

    #[test]
    fn non_deployable_side_loses() {
        let tally = MatchTally { goals: [8, 2], faults: [0, 0], penalty: [238.5, 40.0] };
        let s = score_match(&tally, &MatchRules::default());
        assert_eq!(s.outcome, [Outcome::Loss, Outcome::Win]);
        let score_only = MatchRules { winner: WinnerRule::ScoreOnly, ..MatchRules::default() };
        assert_eq!(score_match(&tally, &score_only).outcome, [Outcome::Win, Outcome::Loss]);
    }

    #[test]
    fn empty_leaderboard() {
        assert!(qualifying_rank(&[], &DeployabilityThresholds::QUALIFYING, &TaskWeights::default()).is_empty());
    }

    #[test]
    fn deployable_beats_higher_scoring_improvable() {
        let rows = vec![
            ScoreRow { team: "improvable".into(), hit: 0.227, defend: 0.616, prepare: 0.362, penalty: 920.0 },
            ScoreRow { team: "deployable".into(), hit: 0.144, defend: 0.478, prepare: 0.478, penalty: 221.0 },
        ];
        let board = qualifying_rank(&rows, &DeployabilityThresholds::QUALIFYING, &TaskWeights::default());
        assert_eq!(board[0].team, "deployable");
        assert!(board[1].score > board[0].score);
    }
}
