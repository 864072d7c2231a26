//! HTTP and SSE service for askwell: sessions, question jobs with streamed
//! progress, suggestion selection, comparisons and feedback.

mod config;
mod jobs;
mod routes;
mod sse;
mod state;
mod store;

use thiserror::Error;

pub use config::{parse_tokens, BackendChoice, PipelineSettings, ServerConfig, DEFAULT_TOKEN_ENV};
pub use jobs::JobHub;
pub use routes::build_router;
pub use sse::format_event;
pub use state::{serve, AppState};
pub use store::{FeedbackRecord, Job, JobStatus, Ratings, Session, Store, StoredEvent};

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("store: {0}")]
    Store(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Nl2Sql(#[from] askwell_core::nl2sql::Nl2SqlError),
    #[error(transparent)]
    Llm(#[from] askwell_core::llm::LlmError),
}
