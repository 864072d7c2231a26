use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;

pub const BUILTIN_SCENARIOS: &str = include_str!("../../data/scenarios.jsonl");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionType {
    Choice,
    Evaluation,
    Diagnosis,
}

impl fmt::Display for DecisionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecisionType::Choice => "choice",
            DecisionType::Evaluation => "evaluation",
            DecisionType::Diagnosis => "diagnosis",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPair {
    pub scenario_id: String,
    pub decision_context: String,
    pub matched_question: String,
    pub database_id: String,
    pub decision_type: DecisionType,
}

impl ScenarioPair {
    fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("scenario_id", &self.scenario_id),
            ("decision_context", &self.decision_context),
            ("matched_question", &self.matched_question),
            ("database_id", &self.database_id),
        ] {
            if v.trim().is_empty() {
                return Err(format!("{name} is empty"));
            }
        }
        Ok(())
    }
}

/// One JSON object per non-blank line; ids must be unique.
pub fn parse_scenarios(text: &str) -> Result<Vec<ScenarioPair>, EvalError> {
    let mut out: Vec<ScenarioPair> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let s: ScenarioPair =
            serde_json::from_str(line).map_err(|e| EvalError::Validation(format!("line {}: {e}", i + 1)))?;
        s.validate().map_err(|e| EvalError::Validation(format!("line {}: {e}", i + 1)))?;
        if out.iter().any(|o| o.scenario_id == s.scenario_id) {
            return Err(EvalError::Validation(format!("line {}: duplicate scenario id {}", i + 1, s.scenario_id)));
        }
        out.push(s);
    }
    if out.is_empty() {
        return Err(EvalError::Validation("no scenarios".into()));
    }
    Ok(out)
}

pub fn load_scenarios(path: &Path) -> Result<Vec<ScenarioPair>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenarios(&text)
}

pub fn builtin_scenarios() -> Vec<ScenarioPair> {
    parse_scenarios(BUILTIN_SCENARIOS).expect("bundled scenarios are valid")
}
