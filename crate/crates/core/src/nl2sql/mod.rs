//! Database profiling, SQL generation, validation and sandboxed execution.

mod fixtures;
mod generate;
mod profile;
mod registry;
mod sandbox;
mod validate;

pub use fixtures::{build_financial_db, build_fixture_dbs, build_schools_db, FIXTURE_SEED};
pub use generate::{answer_question, generate_sql, GeneratedSql, SqlAnswer};
pub use profile::{
    classify_column, introspect_path, looks_temporal_value, ColumnProfile, ColumnStats, DbProfile, TableProfile, TopValue, TypeClass,
    SAMPLE_CAP,
};
pub use registry::{DatabaseRegistry, ENV_BIRD_DEV_DIR};
pub use sandbox::{Sandbox, SandboxConfig, SqlResult};
pub use validate::{validate_sql, Violation, ViolationKind};

use crate::llm::LlmError;

#[derive(Debug, thiserror::Error)]
pub enum Nl2SqlError {
    #[error("unknown database '{0}'")]
    NotFound(String),
    #[error("storage error: {0}")]
    Storage(String),
    #[error("rejected SQL: {0}")]
    Rejected(Violation),
    #[error("query exceeded the {ms} ms deadline")]
    Timeout { ms: u64 },
    #[error("execution error: {0}")]
    Execution(String),
    #[error("SQL generation failed: {reason} (last SQL: {sql})")]
    Generation { sql: String, reason: String },
    #[error(transparent)]
    Llm(#[from] LlmError),
}
