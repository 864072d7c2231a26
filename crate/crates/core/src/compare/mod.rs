//! Original-versus-refined result comparison.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::kb::BiasEntry;
use crate::llm::{ChatMessage, ChatRequest, Gateway, StructuredOutput};
use crate::nl2sql::{classify_column, looks_temporal_value, ColumnStats, SqlResult, TopValue, TypeClass};

pub const ROW_RATIO_LOW: f64 = 0.5;
pub const ROW_RATIO_HIGH: f64 = 2.0;
const MATERIALLY_SIMILAR: &str = "The refined results are materially similar to the original results.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub type_class: TypeClass,
    pub non_null_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Up to three most frequent values, for categorical columns.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub top_values: Vec<TopValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub sql: String,
    pub row_count: u64,
    pub per_column: Vec<ColumnSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedResult {
    pub suggestion_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<ResultSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub original_question: String,
    pub original: ResultSummary,
    pub refined: Vec<RefinedResult>,
    pub deltas: Vec<String>,
    pub explanation: String,
    pub degraded: bool,
}

fn value_key(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Per-column statistics over the returned rows; the row count is the
/// engine's total, which may exceed the returned rows when truncated.
pub fn summarize(result: &SqlResult) -> ResultSummary {
    let per_column = result
        .columns
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let values: Vec<&Value> = result
                .rows
                .iter()
                .filter_map(|r| r.get(i))
                .filter(|v| !v.is_null())
                .collect();
            summarize_column(name, &values, result.rows.len() as u64)
        })
        .collect();
    ResultSummary {
        sql: result.sql.clone(),
        row_count: result.total_row_count,
        per_column,
    }
}

fn summarize_column(name: &str, values: &[&Value], rows: u64) -> ColumnSummary {
    let numbers: Vec<f64> = values.iter().filter_map(|v| v.as_f64()).collect();
    let non_null = values.len() as u64;
    let mut counts: Vec<(String, Value, u64)> = Vec::new();
    for v in values {
        let key = value_key(v);
        match counts.iter_mut().find(|(k, _, _)| *k == key) {
            Some(e) => e.2 += 1,
            None => counts.push((key, (*v).clone(), 1)),
        }
    }

    let type_class = if non_null == 0 {
        TypeClass::Unknown
    } else if numbers.len() as u64 == non_null {
        TypeClass::Numerical
    } else if !numbers.is_empty() {
        TypeClass::Text
    } else {
        let temporal = values
            .iter()
            .filter(|v| v.as_str().is_some_and(looks_temporal_value))
            .count() as u64;
        classify_column(
            "",
            &ColumnStats {
                row_count: rows,
                non_null,
                distinct: counts.len() as u64,
                temporal_matches: temporal,
            },
        )
    };

    let (min, max, mean) = if type_class == TypeClass::Numerical {
        let min = numbers.iter().copied().fold(f64::INFINITY, f64::min);
        let max = numbers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = numbers.iter().sum::<f64>() / numbers.len() as f64;
        (Some(min), Some(max), Some(mean))
    } else {
        (None, None, None)
    };

    let top_values = if type_class == TypeClass::Categorical {
        counts.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
        counts
            .into_iter()
            .take(3)
            .map(|(_, value, count)| TopValue { value, count })
            .collect()
    } else {
        Vec::new()
    };

    ColumnSummary {
        name: name.to_string(),
        type_class,
        non_null_count: non_null,
        min,
        max,
        mean,
        top_values,
    }
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.2}")
    }
}

/// Observations for every (refined result, rule) hit: row-count ratio
/// outside [0.5, 2.0], numeric ranges that no longer overlap, and
/// categorical top values with nothing in common.
pub fn compare(original: &ResultSummary, refined: &[(String, ResultSummary)]) -> Vec<String> {
    let mut deltas = Vec::new();
    for (label, r) in refined {
        if original.row_count == 0 {
            if r.row_count > 0 {
                deltas.push(format!(
                    "\"{label}\": returns {} rows where the original returned none",
                    r.row_count
                ));
            }
        } else {
            let ratio = r.row_count as f64 / original.row_count as f64;
            if !(ROW_RATIO_LOW..=ROW_RATIO_HIGH).contains(&ratio) {
                deltas.push(format!(
                    "\"{label}\": {ratio:.2}× the original row count ({} vs {})",
                    r.row_count, original.row_count
                ));
            }
        }
        for rc in &r.per_column {
            let Some(oc) = original.per_column.iter().find(|c| c.name.eq_ignore_ascii_case(&rc.name)) else {
                continue;
            };
            if let (Some(omin), Some(omax), Some(rmin), Some(rmax)) = (oc.min, oc.max, rc.min, rc.max) {
                if rmin > omax {
                    deltas.push(format!(
                        "\"{label}\": {} range shifted up ({}..{} vs original {}..{})",
                        rc.name,
                        fmt_num(rmin),
                        fmt_num(rmax),
                        fmt_num(omin),
                        fmt_num(omax)
                    ));
                } else if rmax < omin {
                    deltas.push(format!(
                        "\"{label}\": {} range shifted down ({}..{} vs original {}..{})",
                        rc.name,
                        fmt_num(rmin),
                        fmt_num(rmax),
                        fmt_num(omin),
                        fmt_num(omax)
                    ));
                }
            }
            if oc.type_class == TypeClass::Categorical
                && rc.type_class == TypeClass::Categorical
                && !oc.top_values.is_empty()
                && !rc.top_values.is_empty()
            {
                let o: HashSet<String> = oc.top_values.iter().map(|t| value_key(&t.value)).collect();
                let rv: Vec<String> = rc.top_values.iter().map(|t| value_key(&t.value)).collect();
                if rv.iter().all(|v| !o.contains(v)) {
                    let mut ov: Vec<&String> = o.iter().collect();
                    ov.sort();
                    deltas.push(format!(
                        "\"{label}\": top {} values [{}] do not overlap the original [{}]",
                        rc.name,
                        rv.join(", "),
                        ov.into_iter().cloned().collect::<Vec<_>>().join(", ")
                    ));
                }
            }
        }
    }
    deltas
}

/// `comparison-explanation` structured output.
#[derive(Debug, Clone, Deserialize)]
pub struct ExplanationOutput {
    pub explanation: String,
}

impl StructuredOutput for ExplanationOutput {
    const SCHEMA: &'static str = "comparison-explanation";
    fn shape_hint() -> &'static str {
        "{\"explanation\": <a short paragraph for the analyst>}"
    }
    fn check(&self) -> Result<(), String> {
        if self.explanation.trim().is_empty() {
            Err("explanation is empty".into())
        } else {
            Ok(())
        }
    }
}

fn bias_names(biases: &[BiasEntry]) -> String {
    if biases.is_empty() {
        "none recorded".into()
    } else {
        biases.iter().map(|b| b.name.as_str()).collect::<Vec<_>>().join(", ")
    }
}

/// Explanation text without a model call.
pub fn fallback_explanation(deltas: &[String], biases: &[BiasEntry]) -> String {
    if deltas.is_empty() {
        format!(
            "{MATERIALLY_SIMILAR} The refinements still target these biases: {}.",
            bias_names(biases)
        )
    } else {
        format!(
            "The refined questions change the results: {}. They were written to address these biases: {}.",
            deltas.join("; "),
            bias_names(biases)
        )
    }
}

/// One model call explaining the deltas in terms of the addressed biases.
/// Returns the text and whether the fallback was used.
pub fn explain(
    original_question: &str,
    refined_questions: &[String],
    deltas: &[String],
    biases: &[BiasEntry],
    gw: &Gateway,
) -> (String, bool) {
    let user = format!(
        "Original question: {original_question}\nRefined questions:\n{}\n\nObserved differences:\n{}\n\n\
         Biases the refinements address: {}\n\n\
         Explain to the analyst what was wrong with the original question and how the refined results fix it. \
         Reply with a single ```json block: {}",
        refined_questions.iter().map(|q| format!("- {q}")).collect::<Vec<_>>().join("\n"),
        if deltas.is_empty() {
            "none (results are materially similar)".to_string()
        } else {
            deltas.iter().map(|d| format!("- {d}")).collect::<Vec<_>>().join("\n")
        },
        bias_names(biases),
        ExplanationOutput::shape_hint()
    );
    let req = ChatRequest::new(
        "compare:explain",
        vec![
            ChatMessage::system("You explain analytical pitfalls to business analysts in plain language."),
            ChatMessage::user(user),
        ],
    );
    match gw.complete_structured::<ExplanationOutput>(req) {
        Ok((out, _)) => {
            let text = out.explanation.trim().to_string();
            if deltas.is_empty() && !text.to_lowercase().contains("materially similar") {
                (format!("{MATERIALLY_SIMILAR} {text}"), false)
            } else {
                (text, false)
            }
        }
        Err(e) => {
            tracing::info!("comparison explanation failed ({e}); using template");
            (fallback_explanation(deltas, biases), true)
        }
    }
}

/// Summaries, deltas and explanation for one selection.
pub fn build_report(
    original_question: &str,
    original: &SqlResult,
    refined: Vec<(String, Result<SqlResult, String>)>,
    biases: &[BiasEntry],
    gw: &Gateway,
) -> ComparisonReport {
    let original = summarize(original);
    let refined: Vec<RefinedResult> = refined
        .into_iter()
        .map(|(text, r)| match r {
            Ok(res) => RefinedResult {
                suggestion_text: text,
                summary: Some(summarize(&res)),
                error: None,
            },
            Err(e) => RefinedResult {
                suggestion_text: text,
                summary: None,
                error: Some(e),
            },
        })
        .collect();
    let pairs: Vec<(String, ResultSummary)> = refined
        .iter()
        .filter_map(|r| r.summary.clone().map(|s| (r.suggestion_text.clone(), s)))
        .collect();
    let mut deltas = compare(&original, &pairs);
    for r in refined.iter().filter(|r| r.error.is_some()) {
        deltas.push(format!("\"{}\": could not be executed", r.suggestion_text));
    }
    let texts: Vec<String> = refined.iter().map(|r| r.suggestion_text.clone()).collect();
    let (explanation, degraded) = explain(original_question, &texts, &deltas, biases, gw);
    ComparisonReport {
        original_question: original_question.to_string(),
        original,
        refined,
        deltas,
        explanation,
        degraded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::Fixture;
    use serde_json::json;

    fn result(columns: &[&str], rows: Vec<Vec<Value>>) -> SqlResult {
        SqlResult {
            sql: "SELECT".into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            total_row_count: rows.len() as u64,
            rows,
            truncated: false,
            elapsed_ms: 0,
        }
    }

    fn counted(rows: u64) -> ResultSummary {
        ResultSummary {
            sql: String::new(),
            row_count: rows,
            per_column: vec![],
        }
    }

    #[test]
    fn empty_result() {
        let s = summarize(&result(&["a"], vec![]));
        assert_eq!(s.row_count, 0);
        assert_eq!(s.per_column[0].non_null_count, 0);
        assert_eq!(s.per_column[0].type_class, TypeClass::Unknown);
    }

    #[test]
    fn numeric_stats() {
        let s = summarize(&result(&["x"], vec![vec![json!(1)], vec![json!(2)], vec![json!(3)]]));
        let c = &s.per_column[0];
        assert_eq!((c.min, c.max, c.mean), (Some(1.0), Some(3.0), Some(2.0)));
        assert_eq!(c.type_class, TypeClass::Numerical);
    }

    #[test]
    fn mixed_column_is_text_without_mean() {
        let s = summarize(&result(&["x"], vec![vec![json!(1)], vec![json!("two")], vec![Value::Null]]));
        let c = &s.per_column[0];
        assert_eq!(c.type_class, TypeClass::Text);
        assert_eq!(c.mean, None);
        assert_eq!(c.non_null_count, 2);
    }

    #[test]
    fn categorical_top_three() {
        let rows = ["a", "b", "a", "c", "d", "a", "b"].iter().map(|v| vec![json!(v)]).collect();
        let c = &summarize(&result(&["k"], rows)).per_column[0];
        assert_eq!(c.type_class, TypeClass::Categorical);
        let tops: Vec<(String, u64)> = c.top_values.iter().map(|t| (value_key(&t.value), t.count)).collect();
        assert_eq!(tops, vec![("a".into(), 3), ("b".into(), 2), ("c".into(), 1)]);
    }

    #[test]
    fn row_ratio_delta() {
        let d = compare(&counted(100), &[("q".into(), counted(10))]);
        assert_eq!(d.len(), 1);
        assert!(d[0].contains("0.10×"), "{}", d[0]);
        assert!(compare(&counted(100), &[("q".into(), counted(50))]).is_empty());
        assert!(compare(&counted(100), &[("q".into(), counted(200))]).is_empty());
        assert_eq!(compare(&counted(100), &[("q".into(), counted(201))]).len(), 1);
    }

    #[test]
    fn identical_summaries_have_no_deltas() {
        let s = summarize(&result(&["k", "x"], vec![vec![json!("a"), json!(1)], vec![json!("b"), json!(5)]]));
        assert!(compare(&s, &[("q".into(), s.clone())]).is_empty());
    }

    #[test]
    fn range_shift_and_disjoint_categories() {
        let o = summarize(&result(&["k", "x"], vec![vec![json!("a"), json!(1)], vec![json!("b"), json!(5)]]));
        let r = summarize(&result(&["k", "x"], vec![vec![json!("c"), json!(10)], vec![json!("d"), json!(12)]]));
        let d = compare(&o, &[("q".into(), r)]);
        assert_eq!(d.len(), 2, "{d:?}");
        assert!(d[0].contains("do not overlap"));
        assert!(d[1].contains("shifted up"));
    }

    #[test]
    fn explanation_paths() {
        let gw = Gateway::mock(vec![Fixture::for_tag(
            "compare:explain",
            "```json\n{\"explanation\": \"Size is not risk.\"}\n```",
        )]);
        let (text, degraded) = explain("q", &["r".into()], &["d".into()], &[], &gw);
        assert_eq!((text.as_str(), degraded), ("Size is not risk.", false));

        let broken = Gateway::mock(vec![]);
        let (text, degraded) = explain("q", &["r".into()], &["a delta".into()], &[], &broken);
        assert!(degraded);
        assert!(text.contains("a delta"));

        let (text, _) = explain("q", &["r".into()], &[], &[], &broken);
        assert!(text.contains("materially similar"));
        let (text, _) = explain("q", &["r".into()], &[], &[], &gw);
        assert!(text.contains("materially similar"));
    }
}
