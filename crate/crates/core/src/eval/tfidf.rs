//! TF-IDF scenario matching.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::util::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfidfMatch {
    pub decision_idx: usize,
    pub question_idx: usize,
    pub cosine: f64,
}

type SparseVec = BTreeMap<String, f64>;

/// Raw term counts weighted by `ln((1+N)/(1+df)) + 1`, L2-normalized. The
/// document frequencies span every text passed in.
fn vectors(corpus: &[&str]) -> Vec<SparseVec> {
    let n = corpus.len() as f64;
    let tokens: Vec<Vec<String>> = corpus.iter().map(|t| tokenize(t)).collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &tokens {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    tokens
        .iter()
        .map(|doc| {
            let mut v = SparseVec::new();
            for t in doc {
                *v.entry(t.clone()).or_default() += 1.0;
            }
            for (t, w) in v.iter_mut() {
                let d = df[t.as_str()] as f64;
                *w *= ((1.0 + n) / (1.0 + d)).ln() + 1.0;
            }
            let norm = v.values().map(|w| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.values_mut().for_each(|w| *w /= norm);
            }
            v
        })
        .collect()
}

fn dot(a: &SparseVec, b: &SparseVec) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter_map(|(t, w)| large.get(t).map(|x| w * x)).sum()
}

/// Decision × question cosine table.
pub fn cosine_table(decisions: &[String], questions: &[String]) -> Result<Vec<Vec<f64>>, EvalError> {
    if decisions.is_empty() || questions.is_empty() {
        return Err(EvalError::Validation("tf-idf matching needs decisions and questions".into()));
    }
    let corpus: Vec<&str> = decisions.iter().chain(questions).map(String::as_str).collect();
    let v = vectors(&corpus);
    let (dv, qv) = v.split_at(decisions.len());
    Ok(dv.iter().map(|d| qv.iter().map(|q| dot(d, q)).collect()).collect())
}

/// Greedy one-to-one matching in decision order: each decision takes the
/// untaken question with the highest cosine, lower index on ties. Decisions
/// left over once every question is taken are unmatched.
pub fn tfidf_match(decisions: &[String], questions: &[String]) -> Result<Vec<TfidfMatch>, EvalError> {
    let table = cosine_table(decisions, questions)?;
    let mut taken = vec![false; questions.len()];
    let mut out = Vec::new();
    for (di, row) in table.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (qi, &c) in row.iter().enumerate() {
            if taken[qi] {
                continue;
            }
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((qi, c));
            }
        }
        let Some((qi, cosine)) = best else { break };
        taken[qi] = true;
        out.push(TfidfMatch {
            decision_idx: di,
            question_idx: qi,
            cosine,
        });
    }
    Ok(out)
}
