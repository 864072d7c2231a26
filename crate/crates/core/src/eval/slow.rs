//! The SLOW evaluator (Sure, Look, Opposite, Worst): anonymized systems are
//! ranked per dimension by one model call.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EvalError, ScenarioPair, SystemName, SystemOutput};
use crate::llm::{ChatMessage, ChatRequest, Gateway, StructuredOutput};
use crate::nl2sql::DbProfile;

pub const LABELS: [&str; 5] = ["A", "B", "C", "D", "E"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Accuracy,
    Comprehensiveness,
    Concreteness,
    Usefulness,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Accuracy,
        Dimension::Comprehensiveness,
        Dimension::Concreteness,
        Dimension::Usefulness,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Dimension::Accuracy => "accuracy",
            Dimension::Comprehensiveness => "comprehensiveness",
            Dimension::Concreteness => "concreteness",
            Dimension::Usefulness => "usefulness",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `evaluator-ranking` structured output, keyed by anonymous label.
#[derive(Debug, Clone, Deserialize)]
pub struct EvaluatorRanking {
    pub rankings: BTreeMap<String, BTreeMap<Dimension, u8>>,
    #[serde(default)]
    pub notes: String,
}

impl StructuredOutput for EvaluatorRanking {
    const SCHEMA: &'static str = "evaluator-ranking";
    fn shape_hint() -> &'static str {
        "{\"rankings\": {<label>: {\"accuracy\": <rank>, \"comprehensiveness\": <rank>, \"concreteness\": <rank>, \
         \"usefulness\": <rank>}, ...}, \"notes\": <Sure/Look/Opposite/Worst reasoning>} where every dimension ranks \
         the listed systems 1..n with no ties"
    }
    fn check(&self) -> Result<(), String> {
        let n = self.rankings.len();
        if n == 0 {
            return Err("no rankings".into());
        }
        for d in Dimension::ALL {
            let mut seen = BTreeSet::new();
            for (label, ranks) in &self.rankings {
                let r = *ranks.get(&d).ok_or_else(|| format!("{label} has no {d} rank"))?;
                if r == 0 || r as usize > n {
                    return Err(format!("{label} {d} rank {r} outside 1-{n}"));
                }
                if !seen.insert(r) {
                    return Err(format!("duplicate {d} rank {r}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationPass {
    pub pass: u32,
    /// Anonymous label → system, as shown to the evaluator.
    pub permutation: BTreeMap<String, SystemName>,
    pub ranks: BTreeMap<SystemName, BTreeMap<Dimension, u8>>,
    #[serde(default)]
    pub notes: String,
}

/// Seeded label assignment for the given systems; stable per scenario, seed
/// and pass.
pub fn anonymize(systems: &[SystemName], scenario_id: &str, seed: u64, pass: u32) -> BTreeMap<String, SystemName> {
    let mut h = Sha256::new();
    h.update(scenario_id.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(pass.to_le_bytes());
    let digest = h.finalize();
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from_le_bytes(digest[..8].try_into().expect("8 bytes")));
    let mut shuffled = systems.to_vec();
    shuffled.shuffle(&mut rng);
    LABELS.iter().map(|l| l.to_string()).zip(shuffled).collect()
}

fn describe(output: &SystemOutput) -> String {
    let mut lines = Vec::new();
    for (i, q) in output.questions.iter().enumerate() {
        lines.push(format!("  Q{}: {q}", i + 1));
        if let Some(r) = output.results.get(i) {
            match (&r.summary, &r.error) {
                (Some(s), _) => {
                    let cols: Vec<String> = s
                        .per_column
                        .iter()
                        .map(|c| match (c.min, c.max, c.mean) {
                            (Some(lo), Some(hi), Some(m)) => format!("{} {lo}..{hi} mean {m:.2}", c.name),
                            _ if !c.top_values.is_empty() => format!(
                                "{} top {}",
                                c.name,
                                c.top_values.iter().map(|t| t.value.to_string()).collect::<Vec<_>>().join("/")
                            ),
                            _ => c.name.clone(),
                        })
                        .collect();
                    lines.push(format!("      result: {} rows; {}", s.row_count, cols.join("; ")));
                }
                (None, Some(e)) => lines.push(format!("      result: failed ({e})")),
                _ => {}
            }
        }
    }
    lines.join("\n")
}

fn ranking_request(
    scenario: &ScenarioPair,
    profile: &DbProfile,
    shown: &[(String, &SystemOutput)],
    pass: u32,
) -> ChatRequest {
    let systems: Vec<String> = shown
        .iter()
        .map(|(label, out)| format!("System {label}:\n{}", describe(out)))
        .collect();
    let user = format!(
        "Decision context: {}\nOriginal question: {}\n\nSchema:\n{}\n\n{}\n\nSystems to rank: {}\n\n\
         Use the SLOW method for each system: Sure (what it gets right), Look (what the analyst still has to \
         check), Opposite (the strongest case against its framing), Worst (the worst decision it could lead to). \
         Then rank the {} systems from 1 (best) to {} on each dimension: data accuracy, comprehensiveness, \
         concreteness and overall usefulness. Ranks within a dimension must be distinct.\n\n\
         Reply with a single ```json block: {}",
        scenario.decision_context,
        scenario.matched_question,
        profile.ddl_summary(),
        systems.join("\n\n"),
        shown.iter().map(|(l, _)| l.as_str()).collect::<Vec<_>>().join(", "),
        shown.len(),
        shown.len(),
        EvaluatorRanking::shape_hint()
    );
    ChatRequest::new(
        format!("eval:slow:pass-{pass}"),
        vec![
            ChatMessage::system(
                "You are an impartial senior analyst comparing anonymous question sets for a business decision.",
            ),
            ChatMessage::user(user),
        ],
    )
    .with_temperature(0.0)
}

/// One evaluator pass. Failed systems are not shown and take the bottom
/// ranks (canonical order among themselves); the rest are ranked by the
/// model and de-anonymized through the persisted permutation.
pub fn slow_evaluate(
    scenario: &ScenarioPair,
    outputs: &[SystemOutput],
    profile: &DbProfile,
    gw: &Gateway,
    seed: u64,
    pass: u32,
) -> Result<EvaluationPass, EvalError> {
    let unevaluated = |message: String| EvalError::Unevaluated {
        scenario: scenario.scenario_id.clone(),
        message,
    };
    let systems: Vec<SystemName> = outputs.iter().map(|o| o.system).collect();
    if systems.is_empty() || systems.len() > LABELS.len() {
        return Err(unevaluated(format!("expected 1-5 systems, got {}", systems.len())));
    }
    let permutation = anonymize(&systems, &scenario.scenario_id, seed, pass);
    let by_system = |s: SystemName| outputs.iter().find(|o| o.system == s).expect("system present");
    let shown: Vec<(String, &SystemOutput)> = permutation
        .iter()
        .map(|(l, s)| (l.clone(), by_system(*s)))
        .filter(|(_, o)| !o.failed)
        .collect();
    let mut failed: Vec<SystemName> = outputs.iter().filter(|o| o.failed).map(|o| o.system).collect();
    failed.sort();

    let mut ranks: BTreeMap<SystemName, BTreeMap<Dimension, u8>> = BTreeMap::new();
    let mut notes = String::new();
    if !shown.is_empty() {
        let req = ranking_request(scenario, profile, &shown, pass);
        let (ranking, _) = gw
            .complete_structured::<EvaluatorRanking>(req)
            .map_err(|e| unevaluated(e.to_string()))?;
        let expected: BTreeSet<&str> = shown.iter().map(|(l, _)| l.as_str()).collect();
        let got: BTreeSet<&str> = ranking.rankings.keys().map(String::as_str).collect();
        if expected != got {
            return Err(unevaluated(format!("ranked labels {got:?} differ from shown labels {expected:?}")));
        }
        for (label, dims) in ranking.rankings {
            ranks.insert(permutation[&label], dims);
        }
        notes = ranking.notes;
    }
    for (i, s) in failed.iter().enumerate() {
        let r = (shown.len() + i + 1) as u8;
        ranks.insert(*s, Dimension::ALL.iter().map(|d| (*d, r)).collect());
    }
    Ok(EvaluationPass {
        pass,
        permutation,
        ranks,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::Fixture;

    fn scenario() -> ScenarioPair {
        ScenarioPair {
            scenario_id: "s1".into(),
            decision_context: "ctx".into(),
            matched_question: "q".into(),
            database_id: "db".into(),
            decision_type: super::super::DecisionType::Choice,
        }
    }

    fn outputs(failed: &[SystemName]) -> Vec<SystemOutput> {
        SystemName::ALL
            .iter()
            .map(|s| SystemOutput {
                system: *s,
                questions: vec![format!("{s} question")],
                results: vec![],
                failed: failed.contains(s),
                failure: None,
            })
            .collect()
    }

    fn ranking(labels: &[&str]) -> String {
        let mut m = serde_json::Map::new();
        for (i, l) in labels.iter().enumerate() {
            let r = i + 1;
            m.insert(
                l.to_string(),
                serde_json::json!({"accuracy": r, "comprehensiveness": r, "concreteness": r, "usefulness": r}),
            );
        }
        format!("```json\n{}\n```", serde_json::json!({"rankings": m, "notes": "slow"}))
    }

    #[test]
    fn ranks_are_deanonymized() {
        let gw = Gateway::mock(vec![Fixture::for_prefix("eval:slow", ranking(&LABELS))]);
        let p = slow_evaluate(&scenario(), &outputs(&[]), &DbProfile::empty("db"), &gw, 7, 1).unwrap();
        let systems: BTreeSet<SystemName> = p.permutation.values().copied().collect();
        assert_eq!(systems.len(), 5);
        for (i, l) in LABELS.iter().enumerate() {
            let s = p.permutation[*l];
            assert_eq!(p.ranks[&s][&Dimension::Accuracy] as usize, i + 1);
        }
    }

    #[test]
    fn failed_system_ranks_last() {
        let perm = anonymize(&SystemName::ALL, "s1", 7, 1);
        let shown: Vec<&str> = perm
            .iter()
            .filter(|(_, s)| **s != SystemName::Caf)
            .map(|(l, _)| l.as_str())
            .collect();
        let gw = Gateway::mock(vec![Fixture::for_prefix("eval:slow", ranking(&shown))]);
        let p = slow_evaluate(&scenario(), &outputs(&[SystemName::Caf]), &DbProfile::empty("db"), &gw, 7, 1).unwrap();
        for d in Dimension::ALL {
            assert_eq!(p.ranks[&SystemName::Caf][&d], 5);
            let mut r: Vec<u8> = p.ranks.values().map(|m| m[&d]).collect();
            r.sort();
            assert_eq!(r, vec![1, 2, 3, 4, 5]);
        }
    }

    #[test]
    fn duplicate_rank_is_unevaluated() {
        let bad = ranking(&LABELS).replace("\"usefulness\":2", "\"usefulness\":1");
        let gw = Gateway::mock(vec![Fixture::for_prefix("eval:slow", bad)]);
        let r = slow_evaluate(&scenario(), &outputs(&[]), &DbProfile::empty("db"), &gw, 7, 1);
        assert!(matches!(r, Err(EvalError::Unevaluated { .. })), "{r:?}");
        let tags: Vec<String> = gw.calls().into_iter().map(|c| c.tag).collect();
        assert_eq!(tags, vec!["eval:slow:pass-1", "eval:slow:pass-1:repair"]);
    }

    #[test]
    fn permutation_is_seeded() {
        assert_eq!(anonymize(&SystemName::ALL, "s", 1, 1), anonymize(&SystemName::ALL, "s", 1, 1));
        let distinct: BTreeSet<Vec<SystemName>> = (0..20)
            .map(|seed| anonymize(&SystemName::ALL, "s", seed, 1).into_values().collect())
            .collect();
        assert!(distinct.len() > 1);
    }
}
