use std::sync::{Arc, Mutex};
use std::time::Instant;

use sha2::{Digest, Sha256};

use super::config::{CriticPanel, TemplateSet};
use super::stages::{critique, generate_candidates, prepare, reflect, select_winner};
use super::types::{PipelineEvent, PipelineRun, ProgressSink, RunStatus, RunStore, StageFailure, StageTiming};
use super::PipelineError;
use crate::kb::BiasTaxonomy;
use crate::llm::{Gateway, UsageLedger};
use crate::nl2sql::Sandbox;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunInput {
    pub question: String,
    pub decision_context: String,
    pub database_id: String,
    pub seed: u64,
}

/// Stable id derived from the inputs and seed.
pub fn run_id_for(input: &RunInput) -> String {
    let mut h = Sha256::new();
    for part in [&input.question, &input.decision_context, &input.database_id] {
        h.update(part.as_bytes());
        h.update([0]);
    }
    h.update(input.seed.to_le_bytes());
    let hex: String = h.finalize().iter().take(12).map(|b| format!("{b:02x}")).collect();
    format!("run-{hex}")
}

#[derive(Clone)]
pub struct Pipeline {
    pub gateway: Gateway,
    pub sandbox: Arc<Sandbox>,
    pub taxonomy: Arc<BiasTaxonomy>,
    pub templates: Arc<TemplateSet>,
    pub critics: Arc<CriticPanel>,
}

/// Serializes events from worker threads onto the caller's sink.
struct Serialized<'a> {
    sink: &'a dyn ProgressSink,
    lock: Mutex<()>,
}

impl Serialized<'_> {
    fn emit(&self, e: PipelineEvent) {
        let _g = self.lock.lock().expect("sink lock poisoned");
        self.sink.emit(e);
    }
}

impl Pipeline {
    pub fn new(gateway: Gateway, sandbox: Arc<Sandbox>) -> Self {
        Self {
            gateway,
            sandbox,
            taxonomy: Arc::new(BiasTaxonomy::builtin()),
            templates: Arc::new(TemplateSet::builtin()),
            critics: Arc::new(CriticPanel::builtin()),
        }
    }

    /// Runs all stages. The returned run is `Failed` (with the failing
    /// stage recorded and an error event emitted) rather than an `Err` when
    /// a stage fails; it is persisted either way when a store is given.
    pub fn run(&self, input: &RunInput, sink: &dyn ProgressSink, store: Option<&dyn RunStore>) -> PipelineRun {
        let ledger = UsageLedger::shared();
        let gw = self.gateway.with_ledger(ledger.clone());
        let sink = Serialized {
            sink,
            lock: Mutex::new(()),
        };
        let mut run = PipelineRun {
            run_id: run_id_for(input),
            seed: input.seed,
            question: input.question.clone(),
            decision_context: input.decision_context.clone(),
            database_id: input.database_id.clone(),
            status: RunStatus::Completed,
            failure: None,
            context: None,
            candidates: Vec::new(),
            critic_assignment: Vec::new(),
            scores: Vec::new(),
            winner_template_id: None,
            suggestions: Vec::new(),
            degraded: false,
            reflection_calls: 0,
            usage: UsageLedger::default(),
            timings: Vec::new(),
        };

        let outcome = self.run_stages(input, &gw, &sink, &mut run);
        run.usage = ledger.lock().expect("ledger poisoned").clone();
        if let Err(e) = outcome {
            let (stage, message) = match e {
                PipelineError::Stage { stage, message } => (stage, message),
                other => (
                    run.timings.last().map(|t| t.stage.clone()).unwrap_or_else(|| "prepare".into()),
                    other.to_string(),
                ),
            };
            run.status = RunStatus::Failed;
            run.failure = Some(StageFailure {
                stage: stage.clone(),
                message: message.clone(),
            });
            sink.emit(PipelineEvent::Error { stage, message });
        }
        if let Some(store) = store {
            if let Err(e) = store.save_run(&run) {
                tracing::error!(run_id = %run.run_id, "persisting run failed: {e}");
            }
        }
        run
    }

    fn run_stages(
        &self,
        input: &RunInput,
        gw: &Gateway,
        sink: &Serialized<'_>,
        run: &mut PipelineRun,
    ) -> Result<(), PipelineError> {
        let seed = input.seed;
        let stage = |name: &str, run: &mut PipelineRun| {
            sink.emit(PipelineEvent::Stage { stage: name.into() });
            run.timings.push(StageTiming {
                stage: name.into(),
                elapsed_ms: 0,
            });
            Instant::now()
        };
        let finish = |run: &mut PipelineRun, t0: Instant| {
            if let Some(t) = run.timings.last_mut() {
                t.elapsed_ms = t0.elapsed().as_millis() as u64;
            }
        };

        let t0 = stage("prepare", run);
        let ctx = prepare(
            &input.question,
            &input.decision_context,
            &input.database_id,
            &self.sandbox,
            &self.taxonomy,
            gw,
        )?;
        run.context = Some(ctx.clone());
        finish(run, t0);

        let t0 = stage("generate", run);
        let total = self.templates.templates().len();
        let candidates = generate_candidates(&ctx, &self.templates, &self.taxonomy, gw, seed, &|set, done| {
            sink.emit(PipelineEvent::Progress {
                stage: "generate".into(),
                template_id: set.template_id,
                critic_id: None,
                ok: !set.failed,
                completed: done,
                total,
            })
        });
        finish(run, t0);
        let candidates = candidates?;
        run.candidates = candidates.clone();

        let t0 = stage("critique", run);
        let (assignment, scores) = critique(&ctx, &candidates, &self.critics, gw, seed, &|s, done, total| {
            sink.emit(PipelineEvent::Progress {
                stage: "critique".into(),
                template_id: s.candidate_template_id,
                critic_id: Some(s.critic_id),
                ok: s.status == super::types::ScoreStatus::Scored,
                completed: done,
                total,
            })
        });
        run.critic_assignment = assignment;
        run.scores = scores.clone();
        finish(run, t0);

        let t0 = stage("reflect", run);
        let winner_id = select_winner(&candidates, &scores)
            .ok_or_else(|| PipelineError::stage("reflect", "no viable candidates"))?;
        run.winner_template_id = Some(winner_id);
        let winner = candidates
            .iter()
            .find(|c| c.template_id == winner_id)
            .expect("winner is a candidate");
        let feedback: Vec<String> = scores
            .iter()
            .filter(|s| s.candidate_template_id == winner_id)
            .map(|s| s.feedback.clone())
            .collect();
        let (suggestions, degraded) = reflect(&ctx, winner, &feedback, &self.taxonomy, gw, seed);
        run.reflection_calls = 1;
        run.suggestions = suggestions;
        run.degraded = degraded;
        finish(run, t0);
        Ok(())
    }
}
