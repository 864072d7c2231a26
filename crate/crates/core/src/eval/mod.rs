//! Offline evaluation: scenario matching, baselines, the SLOW evaluator and
//! statistics.

mod baselines;
mod runner;
mod scenarios;
mod slow;
mod stats;
mod tfidf;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baselines::{
    baseline_caf, baseline_decision_focused, baseline_direct, baseline_perqs, run_askwell, run_system, EvalDeps,
    QueryOutcome, QuestionList, SystemOutput, PERQS_K,
};
pub use runner::{compute_stats, load_results, run_eval, EvalConfig, ScenarioEvaluation, StatsReport};
pub use scenarios::{builtin_scenarios, load_scenarios, parse_scenarios, DecisionType, ScenarioPair, BUILTIN_SCENARIOS};
pub use slow::{anonymize, slow_evaluate, Dimension, EvaluationPass, EvaluatorRanking, LABELS};
pub use stats::{gwet_ac1, paired_t, rank_shares, win_rate, PairedT, RatingMatrix};
pub use tfidf::{cosine_table, tfidf_match, TfidfMatch};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("degenerate statistic: {0}")]
    Degenerate(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("scenario {scenario}: {message}")]
    Unevaluated { scenario: String, message: String },
}

/// The five compared systems, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemName {
    Askwell,
    Direct,
    DecisionFocused,
    Perqs,
    Caf,
}

impl SystemName {
    pub const ALL: [SystemName; 5] = [
        SystemName::Askwell,
        SystemName::Direct,
        SystemName::DecisionFocused,
        SystemName::Perqs,
        SystemName::Caf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SystemName::Askwell => "askwell",
            SystemName::Direct => "direct",
            SystemName::DecisionFocused => "decision-focused",
            SystemName::Perqs => "perqs",
            SystemName::Caf => "caf",
        }
    }
}

impl fmt::Display for SystemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemName {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| EvalError::Validation(format!("unknown system '{s}'")))
    }
}

/// Parses `all` or a comma-separated list of system names.
pub fn parse_systems(list: &str) -> Result<Vec<SystemName>, EvalError> {
    if list.trim() == "all" {
        return Ok(SystemName::ALL.to_vec());
    }
    let mut out: Vec<SystemName> = list
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(EvalError::Validation("no systems selected".into()));
    }
    Ok(out)
}
