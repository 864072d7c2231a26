use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ScenarioPair, SystemName};
use crate::compare::{summarize, ResultSummary};
use crate::llm::{ChatMessage, ChatRequest, Gateway, StructuredOutput};
use crate::nl2sql::{answer_question, Sandbox};
use crate::pipeline::{NullSink, Pipeline, RunInput, RunStatus};

pub const PERQS_K: usize = 5;
const MAX_LISTED_QUESTIONS: usize = 10;

/// Everything a system needs to turn a scenario into executed questions.
#[derive(Clone)]
pub struct EvalDeps {
    pub gateway: Gateway,
    pub sandbox: Arc<Sandbox>,
    pub pipeline: Pipeline,
}

impl EvalDeps {
    pub fn new(gateway: Gateway, sandbox: Arc<Sandbox>) -> Self {
        let pipeline = Pipeline::new(gateway.clone(), sandbox.clone());
        Self {
            gateway,
            sandbox,
            pipeline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sql: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<ResultSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemOutput {
    pub system: SystemName,
    pub questions: Vec<String>,
    pub results: Vec<QueryOutcome>,
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl SystemOutput {
    fn failed(system: SystemName, reason: impl Into<String>) -> Self {
        Self {
            system,
            questions: Vec::new(),
            results: Vec::new(),
            failed: true,
            failure: Some(reason.into()),
        }
    }
}

/// `question-list` structured output.
#[derive(Debug, Clone, Deserialize)]
pub struct QuestionList {
    pub questions: Vec<String>,
}

impl StructuredOutput for QuestionList {
    const SCHEMA: &'static str = "question-list";
    fn shape_hint() -> &'static str {
        "{\"questions\": [<question>, ...]} with 1 to 10 questions"
    }
    fn check(&self) -> Result<(), String> {
        if self.questions.is_empty() || self.questions.len() > MAX_LISTED_QUESTIONS {
            return Err(format!("expected 1-{MAX_LISTED_QUESTIONS} questions, got {}", self.questions.len()));
        }
        if self.questions.iter().any(|q| q.trim().is_empty()) {
            return Err("empty question".into());
        }
        Ok(())
    }
}

fn execute_all(system: SystemName, questions: Vec<String>, scenario: &ScenarioPair, deps: &EvalDeps) -> SystemOutput {
    let results = questions
        .iter()
        .map(|q| match answer_question(q, None, &scenario.database_id, &deps.sandbox, &deps.gateway) {
            Ok(g) => QueryOutcome {
                question: q.clone(),
                sql: Some(g.sql),
                summary: Some(summarize(&g.result)),
                error: None,
            },
            Err(e) => QueryOutcome {
                question: q.clone(),
                sql: None,
                summary: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    SystemOutput {
        system,
        questions,
        results,
        failed: false,
        failure: None,
    }
}

fn list_request(tag: &str, system: &str, user: String) -> ChatRequest {
    ChatRequest::new(tag, vec![ChatMessage::system(system), ChatMessage::user(user)])
}

/// The original question, unchanged.
pub fn baseline_direct(scenario: &ScenarioPair, deps: &EvalDeps) -> SystemOutput {
    execute_all(SystemName::Direct, vec![scenario.matched_question.clone()], scenario, deps)
}

/// Questions generated from the decision context alone.
pub fn baseline_decision_focused(scenario: &ScenarioPair, deps: &EvalDeps) -> SystemOutput {
    let user = format!(
        "Decision context: {}\n\nWrite the data questions an analyst should answer to support this decision. \
         Reply with a single ```json block: {}",
        scenario.decision_context,
        QuestionList::shape_hint()
    );
    let req = list_request(
        "baseline:decision-focused",
        "You turn business decisions into answerable data questions.",
        user,
    );
    match deps.gateway.complete_structured::<QuestionList>(req) {
        Ok((out, _)) => execute_all(SystemName::DecisionFocused, out.questions, scenario, deps),
        Err(e) => SystemOutput::failed(SystemName::DecisionFocused, e.to_string()),
    }
}

/// `PERQS_K` perturbed rewordings of the original question.
pub fn baseline_perqs(scenario: &ScenarioPair, deps: &EvalDeps) -> SystemOutput {
    let user = format!(
        "Question: {}\n\nWrite exactly {PERQS_K} perturbed variants of this question: paraphrases that change \
         wording, scope or emphasis while keeping it answerable from the same data. \
         Reply with a single ```json block: {}",
        scenario.matched_question,
        QuestionList::shape_hint()
    );
    let req = list_request("baseline:perqs", "You generate question perturbations.", user);
    match deps.gateway.complete_structured::<QuestionList>(req) {
        Ok((mut out, _)) => {
            out.questions.truncate(PERQS_K);
            execute_all(SystemName::Perqs, out.questions, scenario, deps)
        }
        Err(e) => SystemOutput::failed(SystemName::Perqs, e.to_string()),
    }
}

/// One critic call on the original question, then one revision call.
pub fn baseline_caf(scenario: &ScenarioPair, deps: &EvalDeps) -> SystemOutput {
    let critic = list_request(
        "baseline:caf-critic",
        "You are a critic reviewing an analytical question.",
        format!(
            "Decision context: {}\nQuestion: {}\n\nCritique this question: what is weak, missing or misleading?",
            scenario.decision_context, scenario.matched_question
        ),
    );
    let feedback = match deps.gateway.complete(critic) {
        Ok(r) if !r.content.trim().is_empty() => r.content,
        Ok(_) => return SystemOutput::failed(SystemName::Caf, "empty critique"),
        Err(e) => return SystemOutput::failed(SystemName::Caf, e.to_string()),
    };
    let revise = list_request(
        "baseline:caf-revise",
        "You revise analytical questions using critic feedback.",
        format!(
            "Decision context: {}\nQuestion: {}\n\nCritic feedback:\n{}\n\nRevise the question in light of the \
             feedback. Reply with a single ```json block: {}",
            scenario.decision_context,
            scenario.matched_question,
            feedback.trim(),
            QuestionList::shape_hint()
        ),
    );
    match deps.gateway.complete_structured::<QuestionList>(revise) {
        Ok((out, _)) => execute_all(SystemName::Caf, out.questions, scenario, deps),
        Err(e) => SystemOutput::failed(SystemName::Caf, e.to_string()),
    }
}

/// The full refinement pipeline; its suggestions are the question set.
pub fn run_askwell(scenario: &ScenarioPair, deps: &EvalDeps, seed: u64) -> SystemOutput {
    let input = RunInput {
        question: scenario.matched_question.clone(),
        decision_context: scenario.decision_context.clone(),
        database_id: scenario.database_id.clone(),
        seed,
    };
    let run = deps.pipeline.run(&input, &NullSink, None);
    if run.status == RunStatus::Failed {
        let reason = run
            .failure
            .map(|f| format!("{}: {}", f.stage, f.message))
            .unwrap_or_else(|| "pipeline failed".into());
        return SystemOutput::failed(SystemName::Askwell, reason);
    }
    let questions = run.suggestions.into_iter().map(|s| s.question_text).collect();
    execute_all(SystemName::Askwell, questions, scenario, deps)
}

pub fn run_system(system: SystemName, scenario: &ScenarioPair, deps: &EvalDeps, seed: u64) -> SystemOutput {
    match system {
        SystemName::Askwell => run_askwell(scenario, deps, seed),
        SystemName::Direct => baseline_direct(scenario, deps),
        SystemName::DecisionFocused => baseline_decision_focused(scenario, deps),
        SystemName::Perqs => baseline_perqs(scenario, deps),
        SystemName::Caf => baseline_caf(scenario, deps),
    }
}
