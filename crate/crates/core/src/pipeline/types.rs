use serde::{Deserialize, Serialize};

use crate::kb::{BiasEntry, CounterArgument, ToulminAssessment};
use crate::llm::UsageLedger;
use crate::nl2sql::DbProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisContext {
    pub question: String,
    pub decision_context: String,
    pub database_id: String,
    pub profile: DbProfile,
    pub relevant_biases: Vec<BiasEntry>,
    /// `table.column` identifiers judged relevant to the question.
    pub schema_elements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateQuestion {
    pub text: String,
    #[serde(default)]
    pub rationale: String,
    #[serde(default)]
    pub addressed_bias_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub template_id: u8,
    pub questions: Vec<CandidateQuestion>,
    /// Set when the template's output could not be used.
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// Raw model reply, kept for inspection.
    #[serde(default)]
    pub raw: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreStatus {
    Scored,
    /// Critic reply unusable after repair.
    Missing,
    /// Assigned without a call because the candidate had no output.
    Automatic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticScore {
    pub critic_id: u8,
    pub candidate_template_id: u8,
    pub insight: u8,
    pub logic: u8,
    pub bias_mitigation: u8,
    pub feedback: String,
    pub status: ScoreStatus,
}

impl CriticScore {
    pub(crate) fn floor(critic_id: u8, candidate_template_id: u8, status: ScoreStatus, feedback: String) -> Self {
        Self {
            critic_id,
            candidate_template_id,
            insight: 1,
            logic: 1,
            bias_mitigation: 1,
            feedback,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementSuggestion {
    pub question_text: String,
    pub rationale: String,
    pub addressed_bias_ids: Vec<String>,
    pub counter_arguments: Vec<CounterArgument>,
    /// Absent on the degraded path.
    pub toulmin: Option<ToulminAssessment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub run_id: String,
    pub seed: u64,
    pub question: String,
    pub decision_context: String,
    pub database_id: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<StageFailure>,
    pub context: Option<AnalysisContext>,
    pub candidates: Vec<CandidateSet>,
    pub critic_assignment: Vec<[u8; 2]>,
    pub scores: Vec<CriticScore>,
    pub winner_template_id: Option<u8>,
    pub suggestions: Vec<RefinementSuggestion>,
    /// Suggestions came from the fallback rather than a parsed reflection.
    pub degraded: bool,
    pub reflection_calls: u32,
    pub usage: UsageLedger,
    pub timings: Vec<StageTiming>,
}

impl PipelineRun {
    /// JSON with timings zeroed; equal inputs and seed give equal bytes
    /// under the mock backend.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        for t in &mut copy.timings {
            t.elapsed_ms = 0;
        }
        serde_json::to_string(&copy).expect("run serializes")
    }
}

/// Progress notifications emitted while a run executes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PipelineEvent {
    Stage {
        stage: String,
    },
    Progress {
        stage: String,
        template_id: u8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        critic_id: Option<u8>,
        ok: bool,
        completed: usize,
        total: usize,
    },
    Error {
        stage: String,
        message: String,
    },
}

pub trait ProgressSink: Send + Sync {
    fn emit(&self, event: PipelineEvent);
}

/// Sink that drops everything.
pub struct NullSink;

impl ProgressSink for NullSink {
    fn emit(&self, _event: PipelineEvent) {}
}

impl<F: Fn(PipelineEvent) + Send + Sync> ProgressSink for F {
    fn emit(&self, event: PipelineEvent) {
        self(event)
    }
}

/// Persistence hook for finished or failed runs.
pub trait RunStore: Send + Sync {
    fn save_run(&self, run: &PipelineRun) -> Result<(), String>;
}
