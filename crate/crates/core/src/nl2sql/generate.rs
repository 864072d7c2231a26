use serde::{Deserialize, Serialize};

use super::profile::{DbProfile, TypeClass};
use super::sandbox::{Sandbox, SqlResult};
use super::validate::validate_sql;
use super::Nl2SqlError;
use crate::llm::{ChatMessage, ChatRequest, Gateway, LlmError, StructuredOutput};

/// `sql` structured output.
#[derive(Debug, Clone, Deserialize)]
pub struct SqlAnswer {
    pub sql: String,
}

impl StructuredOutput for SqlAnswer {
    const SCHEMA: &'static str = "sql";
    fn shape_hint() -> &'static str {
        "{\"sql\": <one SQLite SELECT statement>}"
    }
    fn check(&self) -> Result<(), String> {
        if self.sql.trim().is_empty() {
            Err("sql is empty".into())
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSql {
    pub sql: String,
    pub result: SqlResult,
    pub attempts: u32,
}

/// Categorical values quoted in the question, mapped to their columns.
fn evidence_hints(question: &str, profile: &DbProfile) -> Vec<String> {
    let q = question.to_lowercase();
    let mut hints = Vec::new();
    for t in &profile.tables {
        for c in &t.columns {
            if c.type_class != TypeClass::Categorical {
                continue;
            }
            for tv in &c.top_values {
                if let Some(s) = tv.value.as_str() {
                    if s.len() > 2 && q.contains(&s.to_lowercase()) {
                        hints.push(format!("'{s}' is a value of {}.{}", t.name, c.name));
                    }
                }
            }
        }
    }
    hints
}

fn base_messages(question: &str, evidence: Option<&str>, profile: &DbProfile) -> Vec<ChatMessage> {
    let mut hints = evidence_hints(question, profile);
    if let Some(e) = evidence.filter(|e| !e.trim().is_empty()) {
        hints.insert(0, e.trim().to_string());
    }
    let hints = if hints.is_empty() {
        "none".to_string()
    } else {
        hints.join("\n")
    };
    let user = format!(
        "Database: {}\nSchema:\n{}\n\nColumn distributions:\n{}\n\nEvidence:\n{}\n\nQuestion: {}\n\n\
         Write one SQLite SELECT statement answering the question. Reply with a single ```json block: {}",
        profile.database_id,
        profile.ddl_summary(),
        profile.distribution_lines().join("\n"),
        hints,
        question.trim(),
        SqlAnswer::shape_hint()
    );
    vec![
        ChatMessage::system(
            "You translate analytical questions into correct, read-only SQLite queries. Use only tables and \
             columns from the schema; prefer explicit joins and column names.",
        ),
        ChatMessage::user(user),
    ]
}

/// Generates SQL and checks it with `accept`. A rejected first attempt
/// triggers one retry carrying the rejection reason.
fn generate_checked<T>(
    question: &str,
    evidence: Option<&str>,
    profile: &DbProfile,
    gw: &Gateway,
    mut accept: impl FnMut(&str) -> Result<T, String>,
) -> Result<(String, T, u32), Nl2SqlError> {
    let messages = base_messages(question, evidence, profile);
    let first = ChatRequest::new("nl2sql:generate", messages.clone());
    let (answer, _) = match gw.complete_structured::<SqlAnswer>(first) {
        Ok(a) => a,
        Err(LlmError::Structured { reason, raw, .. }) => {
            return Err(Nl2SqlError::Generation { sql: raw, reason })
        }
        Err(e) => return Err(e.into()),
    };
    let sql = answer.sql.trim().to_string();
    let reason = match accept(&sql) {
        Ok(v) => return Ok((sql, v, 1)),
        Err(r) => r,
    };

    let mut retry_msgs = messages;
    retry_msgs.push(ChatMessage::assistant(format!("```json\n{{\"sql\": {}}}\n```", serde_json::json!(sql))));
    retry_msgs.push(ChatMessage::user(format!(
        "That query was rejected: {reason}\nReturn a corrected query in the same format."
    )));
    let (answer, _) = match gw.complete_structured::<SqlAnswer>(ChatRequest::new("nl2sql:retry", retry_msgs)) {
        Ok(a) => a,
        Err(LlmError::Structured { reason, .. }) => return Err(Nl2SqlError::Generation { sql, reason }),
        Err(e) => return Err(e.into()),
    };
    let sql = answer.sql.trim().to_string();
    match accept(&sql) {
        Ok(v) => Ok((sql, v, 2)),
        Err(reason) => Err(Nl2SqlError::Generation { sql, reason }),
    }
}

/// SQL for `question`, validated but not executed.
pub fn generate_sql(
    question: &str,
    evidence: Option<&str>,
    profile: &DbProfile,
    gw: &Gateway,
) -> Result<String, Nl2SqlError> {
    generate_checked(question, evidence, profile, gw, |sql| validate_sql(sql).map_err(|v| v.to_string()))
        .map(|(sql, _, _)| sql)
}

/// Generates SQL and executes it; validation and execution failures both
/// count against the single retry.
pub fn answer_question(
    question: &str,
    evidence: Option<&str>,
    db: &str,
    sandbox: &Sandbox,
    gw: &Gateway,
) -> Result<GeneratedSql, Nl2SqlError> {
    let profile = sandbox.introspect(db)?;
    let (sql, result, attempts) =
        generate_checked(question, evidence, &profile, gw, |sql| sandbox.execute(db, sql).map_err(|e| e.to_string()))?;
    Ok(GeneratedSql { sql, result, attempts })
}
