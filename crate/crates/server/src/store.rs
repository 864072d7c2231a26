//! Embedded relational state: sessions, jobs, events, runs, suggestions,
//! comparisons and feedback.

use std::path::Path;
use std::sync::{Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use askwell_core::compare::ComparisonReport;
use askwell_core::nl2sql::SqlResult;
use askwell_core::pipeline::PipelineRun;
use rusqlite::{params, Connection, OptionalExtension};
use serde::{Deserialize, Serialize};

use crate::ServerError;

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS sessions (
    session_id TEXT PRIMARY KEY,
    created_at INTEGER NOT NULL,
    database_id TEXT,
    token_ref TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS jobs (
    job_id TEXT PRIMARY KEY,
    session_id TEXT NOT NULL REFERENCES sessions(session_id),
    status TEXT NOT NULL,
    question TEXT NOT NULL,
    decision_context TEXT NOT NULL,
    database_id TEXT NOT NULL,
    seed INTEGER NOT NULL,
    run_id TEXT,
    original_result TEXT,
    error TEXT,
    created_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS events (
    job_id TEXT NOT NULL REFERENCES jobs(job_id),
    event_id INTEGER NOT NULL,
    event_type TEXT NOT NULL,
    data TEXT NOT NULL,
    PRIMARY KEY (job_id, event_id)
);
CREATE TABLE IF NOT EXISTS runs (
    run_id TEXT PRIMARY KEY,
    job_id TEXT,
    body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS suggestions (
    job_id TEXT NOT NULL REFERENCES jobs(job_id),
    idx INTEGER NOT NULL,
    question_text TEXT NOT NULL,
    body TEXT NOT NULL,
    PRIMARY KEY (job_id, idx)
);
CREATE TABLE IF NOT EXISTS comparisons (
    comparison_id TEXT PRIMARY KEY,
    job_id TEXT NOT NULL REFERENCES jobs(job_id),
    body TEXT NOT NULL,
    created_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS feedback (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    session_id TEXT NOT NULL REFERENCES sessions(session_id),
    scenario_realism INTEGER NOT NULL,
    suggestion_effectiveness INTEGER NOT NULL,
    rationale_clarity INTEGER NOT NULL,
    analysis_impact INTEGER NOT NULL,
    comment TEXT,
    created_at INTEGER NOT NULL
);
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            JobStatus::Queued => "queued",
            JobStatus::Running => "running",
            JobStatus::Done => "done",
            JobStatus::Failed => "failed",
        }
    }

    fn parse(s: &str) -> Self {
        match s {
            "running" => JobStatus::Running,
            "done" => JobStatus::Done,
            "failed" => JobStatus::Failed,
            _ => JobStatus::Queued,
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }

    fn can_move_to(self, next: JobStatus) -> bool {
        matches!(
            (self, next),
            (JobStatus::Queued, JobStatus::Running)
                | (JobStatus::Running, JobStatus::Done)
                | (JobStatus::Running, JobStatus::Failed)
                | (JobStatus::Queued, JobStatus::Failed)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub created_at: i64,
    pub database_id: Option<String>,
    pub token_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub session_id: String,
    pub status: JobStatus,
    pub question: String,
    pub decision_context: String,
    pub database_id: String,
    pub seed: u64,
    pub run_id: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredEvent {
    pub id: u64,
    pub event_type: String,
    pub data: String,
}

impl StoredEvent {
    pub fn is_terminal(&self) -> bool {
        self.event_type == "done" || self.event_type == "error"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Ratings {
    pub scenario_realism: i64,
    pub suggestion_effectiveness: i64,
    pub rationale_clarity: i64,
    pub analysis_impact: i64,
}

impl Ratings {
    pub fn all(&self) -> [(&'static str, i64); 4] {
        [
            ("scenarioRealism", self.scenario_realism),
            ("suggestionEffectiveness", self.suggestion_effectiveness),
            ("rationaleClarity", self.rationale_clarity),
            ("analysisImpact", self.analysis_impact),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub session_id: String,
    pub ratings: Ratings,
    pub comment: Option<String>,
}

pub fn now_secs() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

fn db_err(e: rusqlite::Error) -> ServerError {
    ServerError::Store(e.to_string())
}

fn json_err(e: serde_json::Error) -> ServerError {
    ServerError::Store(format!("stored json: {e}"))
}

/// One connection behind a mutex; writes are serialized.
pub struct Store {
    conn: Mutex<Connection>,
}

impl Store {
    pub fn open(path: &Path) -> Result<Self, ServerError> {
        let conn = Connection::open(path).map_err(db_err)?;
        Self::init(conn)
    }

    pub fn in_memory() -> Result<Self, ServerError> {
        Self::init(Connection::open_in_memory().map_err(db_err)?)
    }

    fn init(conn: Connection) -> Result<Self, ServerError> {
        conn.execute_batch("PRAGMA journal_mode = WAL; PRAGMA foreign_keys = ON;")
            .or_else(|_| conn.execute_batch("PRAGMA foreign_keys = ON;"))
            .map_err(db_err)?;
        conn.execute_batch(SCHEMA).map_err(db_err)?;
        Ok(Self { conn: Mutex::new(conn) })
    }

    fn conn(&self) -> MutexGuard<'_, Connection> {
        self.conn.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn create_session(&self, s: &Session) -> Result<(), ServerError> {
        self.conn()
            .execute(
                "INSERT INTO sessions(session_id, created_at, database_id, token_ref) VALUES (?1, ?2, ?3, ?4)",
                params![s.session_id, s.created_at, s.database_id, s.token_ref],
            )
            .map_err(db_err)?;
        Ok(())
    }

    pub fn session(&self, id: &str) -> Result<Option<Session>, ServerError> {
        self.conn()
            .query_row(
                "SELECT session_id, created_at, database_id, token_ref FROM sessions WHERE session_id = ?1",
                [id],
                |r| {
                    Ok(Session {
                        session_id: r.get(0)?,
                        created_at: r.get(1)?,
                        database_id: r.get(2)?,
                        token_ref: r.get(3)?,
                    })
                },
            )
            .optional()
            .map_err(db_err)
    }

    pub fn create_job(&self, j: &Job) -> Result<(), ServerError> {
        self.conn()
            .execute(
                "INSERT INTO jobs(job_id, session_id, status, question, decision_context, database_id, seed, created_at)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
                params![
                    j.job_id,
                    j.session_id,
                    j.status.as_str(),
                    j.question,
                    j.decision_context,
                    j.database_id,
                    j.seed as i64,
                    now_secs()
                ],
            )
            .map_err(db_err)?;
        Ok(())
    }

    /// Creates the job unless the session already has `cap` unfinished jobs;
    /// returns whether it was created.
    pub fn create_job_capped(&self, j: &Job, cap: usize) -> Result<bool, ServerError> {
        let conn = self.conn();
        let active: i64 = conn
            .query_row(
                "SELECT COUNT(*) FROM jobs WHERE session_id = ?1 AND status IN ('queued', 'running')",
                [&j.session_id],
                |r| r.get(0),
            )
            .map_err(db_err)?;
        if active as usize >= cap {
            return Ok(false);
        }
        conn.execute(
            "INSERT INTO jobs(job_id, session_id, status, question, decision_context, database_id, seed, created_at)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
            params![
                j.job_id,
                j.session_id,
                j.status.as_str(),
                j.question,
                j.decision_context,
                j.database_id,
                j.seed as i64,
                now_secs()
            ],
        )
        .map_err(db_err)?;
        Ok(true)
    }

    pub fn job(&self, id: &str) -> Result<Option<Job>, ServerError> {
        self.conn()
            .query_row(
                "SELECT job_id, session_id, status, question, decision_context, database_id, seed, run_id, error
                 FROM jobs WHERE job_id = ?1",
                [id],
                |r| {
                    Ok(Job {
                        job_id: r.get(0)?,
                        session_id: r.get(1)?,
                        status: JobStatus::parse(&r.get::<_, String>(2)?),
                        question: r.get(3)?,
                        decision_context: r.get(4)?,
                        database_id: r.get(5)?,
                        seed: r.get::<_, i64>(6)? as u64,
                        run_id: r.get(7)?,
                        error: r.get(8)?,
                    })
                },
            )
            .optional()
            .map_err(db_err)
    }

    /// Applies a legal status transition; returns false when the job is
    /// missing or the transition is not allowed.
    pub fn transition(&self, job_id: &str, next: JobStatus, error: Option<&str>) -> Result<bool, ServerError> {
        let conn = self.conn();
        let current: Option<String> = conn
            .query_row("SELECT status FROM jobs WHERE job_id = ?1", [job_id], |r| r.get(0))
            .optional()
            .map_err(db_err)?;
        let Some(current) = current else { return Ok(false) };
        if !JobStatus::parse(&current).can_move_to(next) {
            return Ok(false);
        }
        conn.execute(
            "UPDATE jobs SET status = ?2, error = COALESCE(?3, error) WHERE job_id = ?1",
            params![job_id, next.as_str(), error],
        )
        .map_err(db_err)?;
        Ok(true)
    }

    pub fn set_original_result(&self, job_id: &str, result: &Result<SqlResult, String>) -> Result<(), ServerError> {
        let body = match result {
            Ok(r) => serde_json::json!({ "ok": r }),
            Err(e) => serde_json::json!({ "error": e }),
        };
        self.conn()
            .execute(
                "UPDATE jobs SET original_result = ?2 WHERE job_id = ?1",
                params![job_id, body.to_string()],
            )
            .map_err(db_err)?;
        Ok(())
    }

    pub fn original_result(&self, job_id: &str) -> Result<Option<Result<SqlResult, String>>, ServerError> {
        let raw: Option<Option<String>> = self
            .conn()
            .query_row("SELECT original_result FROM jobs WHERE job_id = ?1", [job_id], |r| r.get(0))
            .optional()
            .map_err(db_err)?;
        let Some(Some(raw)) = raw else { return Ok(None) };
        let v: serde_json::Value = serde_json::from_str(&raw).map_err(json_err)?;
        if let Some(ok) = v.get("ok") {
            Ok(Some(Ok(serde_json::from_value(ok.clone()).map_err(json_err)?)))
        } else {
            Ok(Some(Err(v.get("error").and_then(|e| e.as_str()).unwrap_or("unknown error").to_string())))
        }
    }

    /// Appends an event with the next id for the job. Nothing is appended
    /// once a terminal event exists; `None` is returned then.
    pub fn append_event(&self, job_id: &str, event_type: &str, data: &str) -> Result<Option<u64>, ServerError> {
        let mut conn = self.conn();
        let tx = conn.transaction().map_err(db_err)?;
        let id = append_in(&tx, job_id, event_type, data)?;
        tx.commit().map_err(db_err)?;
        Ok(id)
    }

    /// Moves the job to a terminal status and appends its terminal event
    /// atomically, so readers never see one without the other.
    pub fn finish_job(
        &self,
        job_id: &str,
        status: JobStatus,
        error: Option<&str>,
        event_type: &str,
        data: &str,
    ) -> Result<Option<u64>, ServerError> {
        let mut conn = self.conn();
        let tx = conn.transaction().map_err(db_err)?;
        let current: Option<String> = tx
            .query_row("SELECT status FROM jobs WHERE job_id = ?1", [job_id], |r| r.get(0))
            .optional()
            .map_err(db_err)?;
        if !current.is_some_and(|c| JobStatus::parse(&c).can_move_to(status)) {
            return Ok(None);
        }
        let Some(id) = append_in(&tx, job_id, event_type, data)? else { return Ok(None) };
        tx.execute(
            "UPDATE jobs SET status = ?2, error = COALESCE(?3, error) WHERE job_id = ?1",
            params![job_id, status.as_str(), error],
        )
        .map_err(db_err)?;
        tx.commit().map_err(db_err)?;
        Ok(Some(id))
    }

    pub fn events_after(&self, job_id: &str, after: u64) -> Result<Vec<StoredEvent>, ServerError> {
        let conn = self.conn();
        let mut stmt = conn
            .prepare(
                "SELECT event_id, event_type, data FROM events WHERE job_id = ?1 AND event_id > ?2 ORDER BY event_id",
            )
            .map_err(db_err)?;
        let rows = stmt
            .query_map(params![job_id, after as i64], |r| {
                Ok(StoredEvent {
                    id: r.get::<_, i64>(0)? as u64,
                    event_type: r.get(1)?,
                    data: r.get(2)?,
                })
            })
            .map_err(db_err)?;
        rows.collect::<Result<_, _>>().map_err(db_err)
    }

    pub fn save_run(&self, job_id: Option<&str>, run: &PipelineRun) -> Result<(), ServerError> {
        let body = serde_json::to_string(run).map_err(json_err)?;
        let conn = self.conn();
        conn.execute(
            "INSERT OR REPLACE INTO runs(run_id, job_id, body) VALUES (?1, ?2, ?3)",
            params![run.run_id, job_id, body],
        )
        .map_err(db_err)?;
        if let Some(job_id) = job_id {
            conn.execute("UPDATE jobs SET run_id = ?2 WHERE job_id = ?1", params![job_id, run.run_id])
                .map_err(db_err)?;
        }
        Ok(())
    }

    pub fn run(&self, run_id: &str) -> Result<Option<PipelineRun>, ServerError> {
        let body: Option<String> = self
            .conn()
            .query_row("SELECT body FROM runs WHERE run_id = ?1", [run_id], |r| r.get(0))
            .optional()
            .map_err(db_err)?;
        body.map(|b| serde_json::from_str(&b).map_err(json_err)).transpose()
    }

    pub fn save_suggestions(&self, job_id: &str, run: &PipelineRun) -> Result<(), ServerError> {
        let mut conn = self.conn();
        let tx = conn.transaction().map_err(db_err)?;
        tx.execute("DELETE FROM suggestions WHERE job_id = ?1", [job_id]).map_err(db_err)?;
        for (i, s) in run.suggestions.iter().enumerate() {
            tx.execute(
                "INSERT INTO suggestions(job_id, idx, question_text, body) VALUES (?1, ?2, ?3, ?4)",
                params![job_id, i as i64, s.question_text, serde_json::to_string(s).map_err(json_err)?],
            )
            .map_err(db_err)?;
        }
        tx.commit().map_err(db_err)
    }

    pub fn suggestion_texts(&self, job_id: &str) -> Result<Vec<String>, ServerError> {
        let conn = self.conn();
        let mut stmt = conn
            .prepare("SELECT question_text FROM suggestions WHERE job_id = ?1 ORDER BY idx")
            .map_err(db_err)?;
        let rows = stmt.query_map([job_id], |r| r.get(0)).map_err(db_err)?;
        rows.collect::<Result<_, _>>().map_err(db_err)
    }

    pub fn save_comparison(&self, id: &str, job_id: &str, report: &ComparisonReport) -> Result<(), ServerError> {
        self.conn()
            .execute(
                "INSERT INTO comparisons(comparison_id, job_id, body, created_at) VALUES (?1, ?2, ?3, ?4)",
                params![id, job_id, serde_json::to_string(report).map_err(json_err)?, now_secs()],
            )
            .map_err(db_err)?;
        Ok(())
    }

    /// The report and the job it was built from.
    pub fn comparison(&self, id: &str) -> Result<Option<(String, ComparisonReport)>, ServerError> {
        let row: Option<(String, String)> = self
            .conn()
            .query_row(
                "SELECT job_id, body FROM comparisons WHERE comparison_id = ?1",
                [id],
                |r| Ok((r.get(0)?, r.get(1)?)),
            )
            .optional()
            .map_err(db_err)?;
        row.map(|(job, b)| Ok((job, serde_json::from_str(&b).map_err(json_err)?)))
            .transpose()
    }

    pub fn save_feedback(&self, f: &FeedbackRecord) -> Result<(), ServerError> {
        self.conn()
            .execute(
                "INSERT INTO feedback(session_id, scenario_realism, suggestion_effectiveness, rationale_clarity,
                                      analysis_impact, comment, created_at)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
                params![
                    f.session_id,
                    f.ratings.scenario_realism,
                    f.ratings.suggestion_effectiveness,
                    f.ratings.rationale_clarity,
                    f.ratings.analysis_impact,
                    f.comment,
                    now_secs()
                ],
            )
            .map_err(db_err)?;
        Ok(())
    }

    pub fn feedback_for(&self, session_id: &str) -> Result<Vec<FeedbackRecord>, ServerError> {
        let conn = self.conn();
        let mut stmt = conn
            .prepare(
                "SELECT scenario_realism, suggestion_effectiveness, rationale_clarity, analysis_impact, comment
                 FROM feedback WHERE session_id = ?1 ORDER BY id",
            )
            .map_err(db_err)?;
        let rows = stmt
            .query_map([session_id], |r| {
                Ok(FeedbackRecord {
                    session_id: session_id.to_string(),
                    ratings: Ratings {
                        scenario_realism: r.get(0)?,
                        suggestion_effectiveness: r.get(1)?,
                        rationale_clarity: r.get(2)?,
                        analysis_impact: r.get(3)?,
                    },
                    comment: r.get(4)?,
                })
            })
            .map_err(db_err)?;
        rows.collect::<Result<_, _>>().map_err(db_err)
    }
}

fn append_in(tx: &rusqlite::Transaction<'_>, job_id: &str, event_type: &str, data: &str) -> Result<Option<u64>, ServerError> {
    let terminal: i64 = tx
        .query_row(
            "SELECT COUNT(*) FROM events WHERE job_id = ?1 AND event_type IN ('done', 'error')",
            [job_id],
            |r| r.get(0),
        )
        .map_err(db_err)?;
    if terminal > 0 {
        return Ok(None);
    }
    let next: i64 = tx
        .query_row("SELECT COALESCE(MAX(event_id), 0) + 1 FROM events WHERE job_id = ?1", [job_id], |r| r.get(0))
        .map_err(db_err)?;
    tx.execute(
        "INSERT INTO events(job_id, event_id, event_type, data) VALUES (?1, ?2, ?3, ?4)",
        params![job_id, next, event_type, data],
    )
    .map_err(db_err)?;
    Ok(Some(next as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded() -> Store {
        let s = Store::in_memory().unwrap();
        s.create_session(&Session {
            session_id: "s".into(),
            created_at: 0,
            database_id: None,
            token_ref: "t".into(),
        })
        .unwrap();
        s.create_job(&Job {
            job_id: "j".into(),
            session_id: "s".into(),
            status: JobStatus::Queued,
            question: "q".into(),
            decision_context: "c".into(),
            database_id: "d".into(),
            seed: 1,
            run_id: None,
            error: None,
        })
        .unwrap();
        s
    }

    #[test]
    fn event_ids_increase_and_stop_at_terminal() {
        let s = seeded();
        assert_eq!(s.append_event("j", "stage", "{}").unwrap(), Some(1));
        assert_eq!(s.append_event("j", "progress", "{}").unwrap(), Some(2));
        assert_eq!(s.append_event("j", "done", "{}").unwrap(), Some(3));
        assert_eq!(s.append_event("j", "stage", "{}").unwrap(), None);
        let tail = s.events_after("j", 1).unwrap();
        assert_eq!(tail.iter().map(|e| e.id).collect::<Vec<_>>(), vec![2, 3]);
        assert!(tail[1].is_terminal());
    }

    #[test]
    fn status_transitions_are_forward_only() {
        let s = seeded();
        assert!(!s.transition("j", JobStatus::Done, None).unwrap());
        assert!(s.transition("j", JobStatus::Running, None).unwrap());
        assert!(s.transition("j", JobStatus::Failed, Some("boom")).unwrap());
        assert!(!s.transition("j", JobStatus::Running, None).unwrap());
        let j = s.job("j").unwrap().unwrap();
        assert_eq!((j.status, j.error.as_deref()), (JobStatus::Failed, Some("boom")));
    }

    #[test]
    fn finishing_is_atomic_and_single() {
        let s = seeded();
        assert_eq!(s.finish_job("j", JobStatus::Done, None, "done", "{}").unwrap(), None);
        s.transition("j", JobStatus::Running, None).unwrap();
        assert_eq!(s.append_event("j", "stage", "{}").unwrap(), Some(1));
        assert_eq!(s.finish_job("j", JobStatus::Failed, Some("late"), "error", "{}").unwrap(), Some(2));
        assert_eq!(s.finish_job("j", JobStatus::Done, None, "done", "{}").unwrap(), None);
        let j = s.job("j").unwrap().unwrap();
        assert_eq!((j.status, j.error.as_deref()), (JobStatus::Failed, Some("late")));
        assert_eq!(s.events_after("j", 0).unwrap().len(), 2);
    }

    #[test]
    fn job_cap() {
        let s = seeded();
        let mut j = s.job("j").unwrap().unwrap();
        j.job_id = "j2".into();
        assert!(!s.create_job_capped(&j, 1).unwrap());
        assert!(s.create_job_capped(&j, 2).unwrap());
    }

    #[test]
    fn feedback_round_trip() {
        let s = seeded();
        let f = FeedbackRecord {
            session_id: "s".into(),
            ratings: Ratings {
                scenario_realism: 5,
                suggestion_effectiveness: 4,
                rationale_clarity: 3,
                analysis_impact: 2,
            },
            comment: Some("useful".into()),
        };
        s.save_feedback(&f).unwrap();
        assert_eq!(s.feedback_for("s").unwrap(), vec![f]);
    }
}
