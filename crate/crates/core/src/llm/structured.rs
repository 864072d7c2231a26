//! Fenced structured-output extraction and schema checks.

use std::sync::OnceLock;

use regex::Regex;
use serde::de::DeserializeOwned;

/// Every schema name the gateway can validate against.
pub const SCHEMA_NAMES: &[&str] = &[
    "candidate-set",
    "critic-score",
    "reflection",
    "bias-selection",
    "schema-elements",
    "sql",
    "comparison-explanation",
    "question-list",
    "evaluator-ranking",
];

/// A typed structured output. `check` enforces constraints serde cannot.
pub trait StructuredOutput: DeserializeOwned {
    const SCHEMA: &'static str;

    /// One-line description of the expected JSON shape, used in prompts and
    /// repair requests.
    fn shape_hint() -> &'static str;

    fn check(&self) -> Result<(), String> {
        Ok(())
    }
}

fn fence_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[A-Za-z0-9_+-]*[ \t]*\r?\n(.*?)```").expect("valid regex"))
}

/// The body of the first fenced block, or the trimmed content when no fence
/// is present.
pub fn first_block(content: &str) -> &str {
    match fence_regex().captures(content).and_then(|c| c.get(1)) {
        Some(m) => m.as_str().trim(),
        None => content.trim(),
    }
}

pub fn parse_structured<T: StructuredOutput>(content: &str) -> Result<T, String> {
    let block = first_block(content);
    let value: T = serde_json::from_str(block).map_err(|e| format!("{}: {e}", T::SCHEMA))?;
    value.check().map_err(|e| format!("{}: {e}", T::SCHEMA))?;
    Ok(value)
}

pub fn repair_instruction<T: StructuredOutput>() -> String {
    format!(
        "Your previous reply could not be parsed. Return only valid structured output for schema \
         {}: a single ```json fenced block containing {}. No prose.",
        T::SCHEMA,
        T::shape_hint()
    )
}
