#![allow(dead_code)]

use puckbench::metrics::{Deployability, ScoreRow};

/// One reference qualifying row: rates in percent, printed score.
pub struct QualifyingFixture {
    pub team: &'static str,
    pub hit: f64,
    pub defend: f64,
    pub prepare: f64,
    pub penalty: f64,
    pub score: f64,
    pub level: Deployability,
}

const fn q(team: &'static str, hit: f64, defend: f64, prepare: f64, penalty: f64, score: f64, level: Deployability) -> QualifyingFixture {
    QualifyingFixture { team, hit, defend, prepare, penalty, score, level }
}

/// Qualifying leaderboard in printed order.
pub const QUALIFYING: [QualifyingFixture; 13] = [
    q("AiRLIHockey", 54.9, 84.5, 90.3, 327.5, 73.8, Deployability::Deployable),
    q("Air-HocKIT", 52.2, 79.0, 68.6, 341.0, 66.2, Deployability::Deployable),
    q("GXU-LIPE", 30.1, 29.5, 66.2, 475.5, 37.1, Deployability::Deployable),
    q("SpaceR", 14.4, 47.8, 47.8, 221.0, 34.4, Deployability::Deployable),
    q("Baseline", 12.8, 25.4, 66.3, 352.5, 28.5, Deployability::Deployable),
    q("Baseline-ATACOM", 18.4, 36.1, 30.1, 33.0, 27.8, Deployability::Deployable),
    q("AJoy", 18.4, 36.1, 20.0, 108.0, 25.8, Deployability::Deployable),
    q("Kalash Jain", 0.0, 19.5, 8.3, 0.0, 9.5, Deployability::Deployable),
    q("RL3_polimi", 22.7, 61.6, 36.2, 920.0, 41.0, Deployability::Improvable),
    q("AeroTron", 33.2, 23.2, 66.5, 594.0, 35.9, Deployability::Improvable),
    q("CONFIRMTEAM", 29.3, 23.9, 65.3, 629.0, 34.4, Deployability::Improvable),
    q("Tony", 33.2, 23.2, 54.3, 718.0, 33.4, Deployability::Improvable),
    q("sprkrd", 0.2, 5.5, 0.0, 1271.0, 2.3, Deployability::Improvable),
];

/// Score rows in a scrambled input order so ranking is actually exercised.
pub fn qualifying_rows() -> Vec<ScoreRow> {
    let order = [12, 3, 8, 0, 10, 5, 1, 11, 7, 2, 9, 4, 6];
    order
        .iter()
        .map(|&i| {
            let f = &QUALIFYING[i];
            ScoreRow { team: f.team.into(), hit: f.hit / 100.0, defend: f.defend / 100.0, prepare: f.prepare / 100.0, penalty: f.penalty }
        })
        .collect()
}

/// One reference tournament aggregate row.
pub struct TournamentFixture {
    pub team: &'static str,
    pub wins: u32,
    pub losses: u32,
    pub draws: u32,
    pub goals_scored: u32,
    pub goals_received: u32,
    pub penalty: f64,
    /// Total points from the round-by-round table.
    pub points: u32,
}

const fn t(team: &'static str, wins: u32, losses: u32, draws: u32, goals_scored: u32, goals_received: u32, penalty: f64, points: u32) -> TournamentFixture {
    TournamentFixture { team, wins, losses, draws, goals_scored, goals_received, penalty, points }
}

pub const TOURNAMENT: [TournamentFixture; 7] = [
    t("AiRLIHockey", 11, 0, 0, 270, 8, 744.0, 33),
    t("SpaceR", 7, 4, 0, 31, 97, 859.0, 21),
    t("Air-HocKIT", 6, 3, 2, 232, 40, 1425.0, 20),
    t("AJoy", 5, 6, 0, 10, 357, 396.5, 15),
    t("RL3_polimi", 3, 6, 2, 25, 99, 1669.0, 11),
    t("GXU-LIPE", 0, 8, 3, 92, 49, 3752.0, 3),
    t("CONFIRMTEAM", 0, 5, 1, 59, 69, 2186.0, 1),
];
