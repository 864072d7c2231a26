use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use askwell_core::compare::summarize;
use askwell_core::nl2sql::{answer_question, SqlResult};
use askwell_core::pipeline::{PipelineEvent, PipelineRun, RunInput, RunStatus, RunStore};
use serde_json::{json, Value};
use tokio::sync::watch;

use crate::state::AppState;
use crate::store::{Job, JobStatus, Store};

const RESULT_PREVIEW_ROWS: usize = 50;

/// Live notification of new event ids, one channel per running job.
#[derive(Default)]
pub struct JobHub {
    channels: Mutex<HashMap<String, watch::Sender<u64>>>,
}

impl JobHub {
    pub fn open(&self, job_id: &str) {
        let (tx, _) = watch::channel(0);
        self.channels.lock().expect("hub poisoned").insert(job_id.to_string(), tx);
    }

    pub fn subscribe(&self, job_id: &str) -> Option<watch::Receiver<u64>> {
        self.channels.lock().expect("hub poisoned").get(job_id).map(|t| t.subscribe())
    }

    pub fn notify(&self, job_id: &str, id: u64) {
        if let Some(tx) = self.channels.lock().expect("hub poisoned").get(job_id) {
            tx.send_replace(id);
        }
    }

    /// Drops the channel; subscribers see it closed and fall back to the log.
    pub fn close(&self, job_id: &str) {
        self.channels.lock().expect("hub poisoned").remove(job_id);
    }
}

/// Persists then announces events for one job.
#[derive(Clone)]
pub(crate) struct Emitter {
    store: Arc<Store>,
    hub: Arc<JobHub>,
    job_id: String,
}

impl Emitter {
    pub(crate) fn new(state: &AppState, job_id: &str) -> Self {
        Self {
            store: state.store.clone(),
            hub: state.hub.clone(),
            job_id: job_id.to_string(),
        }
    }

    pub(crate) fn emit(&self, event_type: &str, data: &Value) -> Option<u64> {
        match self.store.append_event(&self.job_id, event_type, &data.to_string()) {
            Ok(Some(id)) => {
                self.hub.notify(&self.job_id, id);
                Some(id)
            }
            Ok(None) => None,
            Err(e) => {
                tracing::error!("job {}: event not persisted: {e}", self.job_id);
                None
            }
        }
    }
}

struct JobRunStore<'a> {
    store: &'a Store,
    job_id: &'a str,
}

impl RunStore for JobRunStore<'_> {
    fn save_run(&self, run: &PipelineRun) -> Result<(), String> {
        self.store.save_run(Some(self.job_id), run).map_err(|e| e.to_string())
    }
}

enum Outcome {
    Done { run_id: String },
    Failed { stage: String, message: String },
}

fn result_payload(question: &str, r: &Result<SqlResult, String>) -> Value {
    match r {
        Ok(res) => json!({
            "question": question,
            "sql": res.sql,
            "columns": res.columns,
            "rows": res.rows.iter().take(RESULT_PREVIEW_ROWS).collect::<Vec<_>>(),
            "totalRowCount": res.total_row_count,
            "truncated": res.truncated,
            "elapsedMs": res.elapsed_ms,
            "summary": summarize(res),
        }),
        Err(e) => json!({ "question": question, "error": e }),
    }
}

fn execute(state: &AppState, job: &Job, out: &Emitter) -> Outcome {
    let sandbox = &state.pipeline.sandbox;
    let original = answer_question(&job.question, None, &job.database_id, sandbox, &state.pipeline.gateway)
        .map(|g| g.result)
        .map_err(|e| e.to_string());
    if let Err(e) = state.store.set_original_result(&job.job_id, &original) {
        tracing::error!("job {}: original result not stored: {e}", job.job_id);
    }

    let sink = |e: PipelineEvent| match &e {
        PipelineEvent::Stage { stage } => {
            out.emit("stage", &json!({ "stage": stage }));
        }
        PipelineEvent::Progress { .. } => {
            out.emit("progress", &serde_json::to_value(&e).unwrap_or(Value::Null));
        }
        // reported as the terminal event by the caller
        PipelineEvent::Error { .. } => {}
    };
    let input = RunInput {
        question: job.question.clone(),
        decision_context: job.decision_context.clone(),
        database_id: job.database_id.clone(),
        seed: job.seed,
    };
    let run_store = JobRunStore {
        store: &state.store,
        job_id: &job.job_id,
    };
    let run = state.pipeline.run(&input, &sink, Some(&run_store));
    if run.status == RunStatus::Failed {
        let f = run.failure.unwrap_or_else(|| askwell_core::pipeline::StageFailure {
            stage: "pipeline".into(),
            message: "failed".into(),
        });
        return Outcome::Failed {
            stage: f.stage,
            message: f.message,
        };
    }

    if let Some(ctx) = &run.context {
        for b in &ctx.relevant_biases {
            out.emit(
                "insight",
                &json!({
                    "biasId": b.id,
                    "name": b.name,
                    "category": b.category,
                    "description": b.description,
                }),
            );
        }
    }
    out.emit("result", &result_payload(&job.question, &original));
    if let Err(e) = state.store.save_suggestions(&job.job_id, &run) {
        return Outcome::Failed {
            stage: "persist".into(),
            message: e.to_string(),
        };
    }
    out.emit(
        "suggestions",
        &json!({
            "runId": run.run_id,
            "winnerTemplateId": run.winner_template_id,
            "degraded": run.degraded,
            "suggestions": run.suggestions,
        }),
    );
    Outcome::Done { run_id: run.run_id }
}

fn finish(state: &AppState, job_id: &str, outcome: Outcome) {
    let (status, error, event_type, data) = match outcome {
        Outcome::Done { run_id } => (JobStatus::Done, None, "done", json!({ "jobId": job_id, "runId": run_id })),
        Outcome::Failed { stage, message } => (
            JobStatus::Failed,
            Some(format!("{stage}: {message}")),
            "error",
            json!({ "jobId": job_id, "stage": stage, "message": message }),
        ),
    };
    match state
        .store
        .finish_job(job_id, status, error.as_deref(), event_type, &data.to_string())
    {
        Ok(Some(id)) => state.hub.notify(job_id, id),
        Ok(None) => {}
        Err(e) => tracing::error!("job {job_id}: terminal event not persisted: {e}"),
    }
    state.hub.close(job_id);
}

/// Runs a queued job to a terminal event within the job deadline.
pub(crate) async fn run_job(state: AppState, job: Job) {
    let job_id = job.job_id.clone();
    if !matches!(state.store.transition(&job_id, JobStatus::Running, None), Ok(true)) {
        tracing::error!("job {job_id} could not start");
        finish(
            &state,
            &job_id,
            Outcome::Failed {
                stage: "queue".into(),
                message: "job could not start".into(),
            },
        );
        return;
    }
    let worker_state = state.clone();
    let handle = tokio::task::spawn_blocking(move || {
        let out = Emitter::new(&worker_state, &job.job_id);
        execute(&worker_state, &job, &out)
    });
    let outcome = match tokio::time::timeout(state.job_deadline, handle).await {
        Ok(Ok(o)) => o,
        Ok(Err(e)) => Outcome::Failed {
            stage: "internal".into(),
            message: format!("job worker stopped: {e}"),
        },
        Err(_) => Outcome::Failed {
            stage: "deadline".into(),
            message: format!("job exceeded {}s", state.job_deadline.as_secs()),
        },
    };
    finish(&state, &job_id, outcome);
}
