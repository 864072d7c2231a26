use std::collections::HashSet;

use serde::Deserialize;

use super::taxonomy::{BiasEntry, BiasTaxonomy, KbError};
use crate::llm::{ChatMessage, ChatRequest, Gateway, StructuredOutput};
use crate::nl2sql::DbProfile;

pub const DEFAULT_BIAS_K: usize = 8;

/// `bias-selection` structured output.
#[derive(Debug, Clone, Deserialize)]
pub struct BiasSelection {
    pub bias_ids: Vec<String>,
}

impl StructuredOutput for BiasSelection {
    const SCHEMA: &'static str = "bias-selection";
    fn shape_hint() -> &'static str {
        "{\"bias_ids\": [<bias id>, ...]} ordered from most to least relevant"
    }
}

/// Cue scoring: each entry scores the number of its distinct cues found
/// (case-insensitive substring) in the question or context. Entries with
/// no hits are dropped; ties keep taxonomy order.
pub fn heuristic_biases(question: &str, context: &str, taxonomy: &BiasTaxonomy, k: usize) -> Vec<BiasEntry> {
    let text = format!("{}\n{}", question, context).to_lowercase();
    let mut scored: Vec<(usize, usize)> = taxonomy
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let cues: HashSet<String> = e.cues.iter().map(|c| c.to_lowercase()).collect();
            (cues.iter().filter(|c| !c.is_empty() && text.contains(c.as_str())).count(), i)
        })
        .filter(|(score, _)| *score > 0)
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    scored
        .into_iter()
        .take(k)
        .map(|(_, i)| taxonomy.entries()[i].clone())
        .collect()
}

fn selection_prompt(question: &str, context: &str, profile: &DbProfile, taxonomy: &BiasTaxonomy, k: usize) -> ChatRequest {
    let catalog: Vec<String> = taxonomy
        .entries()
        .iter()
        .map(|e| format!("- {} ({}, {}): {}", e.id, e.name, e.category, e.description))
        .collect();
    let tables: Vec<String> = profile
        .tables
        .iter()
        .map(|t| {
            let cols: Vec<&str> = t.columns.iter().map(|c| c.name.as_str()).collect();
            format!("{}({})", t.name, cols.join(", "))
        })
        .collect();
    let user = format!(
        "Decision context: {context}\nQuestion: {question}\nDatabase tables: {}\n\n\
         Bias catalog:\n{}\n\n\
         Pick at most {k} biases from the catalog that most threaten an analysis answering this \
         question for this decision. Reply with a single ```json block: {}",
        tables.join("; "),
        catalog.join("\n"),
        BiasSelection::shape_hint()
    );
    ChatRequest::new(
        "prepare:biases",
        vec![
            ChatMessage::system(
                "You audit analytical questions for cognitive biases and blind spots before they are turned into SQL.",
            ),
            ChatMessage::user(user),
        ],
    )
}

/// Ranked biases relevant to a question. With a gateway, the model's choice
/// (filtered to known ids, deduplicated, at most `k`) is used; any gateway
/// or parsing failure, or an empty filtered answer, falls back to
/// [`heuristic_biases`].
pub fn select_relevant_biases(
    question: &str,
    context: &str,
    profile: &DbProfile,
    taxonomy: &BiasTaxonomy,
    llm: Option<&Gateway>,
    k: usize,
) -> Result<Vec<BiasEntry>, KbError> {
    if question.trim().is_empty() {
        return Err(KbError::EmptyQuestion);
    }
    if let Some(gw) = llm {
        match gw.complete_structured::<BiasSelection>(selection_prompt(question, context, profile, taxonomy, k)) {
            Ok((sel, _)) => {
                let mut seen = HashSet::new();
                let picked: Vec<BiasEntry> = sel
                    .bias_ids
                    .iter()
                    .map(|id| id.trim())
                    .filter(|id| seen.insert(id.to_string()))
                    .filter_map(|id| taxonomy.get(id).cloned())
                    .take(k)
                    .collect();
                if !picked.is_empty() {
                    return Ok(picked);
                }
                tracing::info!("bias selection named no known ids; using cue heuristic");
            }
            Err(e) => tracing::info!("bias selection failed ({e}); using cue heuristic"),
        }
    }
    Ok(heuristic_biases(question, context, taxonomy, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::Fixture;

    const Q: &str = "Which clients have the largest loans?";
    const C: &str = "Identify loan accounts that are at risk of default";

    fn ids(v: &[BiasEntry]) -> Vec<&str> {
        v.iter().map(|e| e.id.as_str()).collect()
    }

    #[test]
    fn loans_example_surfaces_size_vs_risk_biases() {
        let t = BiasTaxonomy::builtin();
        let got = heuristic_biases(Q, C, &t, DEFAULT_BIAS_K);
        let got = ids(&got);
        for want in ["similarity", "framing-effect", "selection-bias"] {
            assert!(got.contains(&want), "{want} missing from {got:?}");
        }
        assert!(got.len() <= DEFAULT_BIAS_K);
    }

    #[test]
    fn no_cue_hits_is_empty() {
        let t = BiasTaxonomy::builtin();
        assert!(heuristic_biases("zzz qqq", "", &t, 8).is_empty());
    }

    #[test]
    fn heuristic_is_deterministic_and_a_subset() {
        let t = BiasTaxonomy::builtin();
        let a = heuristic_biases(Q, C, &t, 8);
        assert_eq!(a, heuristic_biases(Q, C, &t, 8));
        assert!(a.iter().all(|e| t.contains(&e.id)));
    }

    #[test]
    fn gateway_choice_is_filtered_and_ordered() {
        let t = BiasTaxonomy::builtin();
        let gw = Gateway::mock(vec![Fixture::for_tag(
            "prepare:biases",
            "```json\n{\"bias_ids\": [\"anchoring\", \"not-a-bias\", \"recall\", \"anchoring\"]}\n```",
        )]);
        let got = select_relevant_biases(Q, C, &DbProfile::empty("x"), &t, Some(&gw), 8).unwrap();
        assert_eq!(ids(&got), vec!["anchoring", "recall"]);
    }

    #[test]
    fn unparseable_gateway_output_falls_back() {
        let t = BiasTaxonomy::builtin();
        let gw = Gateway::mock(vec![]);
        let got = select_relevant_biases(Q, C, &DbProfile::empty("x"), &t, Some(&gw), 8).unwrap();
        assert_eq!(got, heuristic_biases(Q, C, &t, 8));
        assert_eq!(gw.calls().len(), 2);
    }

    #[test]
    fn empty_question_rejected() {
        let t = BiasTaxonomy::builtin();
        assert!(select_relevant_biases("  ", C, &DbProfile::empty("x"), &t, None, 8).is_err());
    }
}
