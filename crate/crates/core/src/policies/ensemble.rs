use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Balanced,
    Aggressive,
    Defensive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleMargins {
    /// Lead (own minus opponent score) at which play turns defensive.
    pub defensive: f64,
}

impl Default for EnsembleMargins {
    fn default() -> Self {
        Self { defensive: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    pub strategy: Strategy,
    pub score_diff: f64,
    pub margins: EnsembleMargins,
}

pub fn ensemble_select(score_diff: f64, margins: &EnsembleMargins) -> Strategy {
    if score_diff < 0.0 {
        Strategy::Aggressive
    } else if score_diff >= margins.defensive {
        Strategy::Defensive
    } else {
        Strategy::Balanced
    }
}
