//! Three-stage refinement: data preparation, candidate generation with a
//! critic panel, and a single self-reflection pass.

mod config;
mod run;
mod stages;
mod types;

pub use config::{
    CriticPanel, CriticPersona, PromptTemplate, TemplateSet, CRITIC_COUNT, PLACEHOLDERS, TEMPLATE_COUNT,
};
pub use run::{run_id_for, Pipeline, RunInput};
pub use stages::{
    assign_critics, critique, generate_candidates, heuristic_schema_elements, pick_winner, prepare, reflect,
    select_winner, CandidateOutput, CriticOutput, ReflectionItem, ReflectionOutput, SchemaElementsOutput,
    MAX_CANDIDATE_QUESTIONS, MAX_SUGGESTIONS,
};
pub use types::{
    AnalysisContext, CandidateQuestion, CandidateSet, CriticScore, NullSink, PipelineEvent, PipelineRun,
    ProgressSink, RefinementSuggestion, RunStatus, RunStore, ScoreStatus, StageFailure, StageTiming,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("pipeline configuration: {0}")]
    Config(String),
    #[error("stage '{stage}' failed: {message}")]
    Stage { stage: String, message: String },
}

impl PipelineError {
    pub fn stage(stage: &str, err: impl std::fmt::Display) -> Self {
        PipelineError::Stage {
            stage: stage.to_string(),
            message: err.to_string(),
        }
    }
}
