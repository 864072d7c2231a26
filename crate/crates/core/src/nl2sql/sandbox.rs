use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use rusqlite::limits::Limit;
use rusqlite::types::ValueRef;
use rusqlite::{Connection, OpenFlags};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::profile::{introspect_path, DbProfile};
use super::registry::DatabaseRegistry;
use super::validate::validate_sql;
use super::Nl2SqlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SandboxConfig {
    pub row_cap: usize,
    pub deadline_ms: u64,
    pub pool_size: usize,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        Self {
            row_cap: 1000,
            deadline_ms: 5000,
            pool_size: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqlResult {
    pub sql: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub total_row_count: u64,
    pub truncated: bool,
    pub elapsed_ms: u64,
}

pub(crate) fn value_to_json(v: ValueRef<'_>) -> Value {
    match v {
        ValueRef::Null => Value::Null,
        ValueRef::Integer(i) => Value::from(i),
        ValueRef::Real(f) => serde_json::Number::from_f64(f).map(Value::Number).unwrap_or(Value::Null),
        ValueRef::Text(t) => Value::String(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => Value::String(format!("<blob {} bytes>", b.len())),
    }
}

struct Pool {
    path: PathBuf,
    max: usize,
    state: Mutex<(Vec<Connection>, usize)>,
    cv: Condvar,
}

struct Lease<'a> {
    pool: &'a Pool,
    conn: Option<Connection>,
}

impl Drop for Lease<'_> {
    fn drop(&mut self) {
        if let Some(c) = self.conn.take() {
            self.pool.state.lock().expect("pool poisoned").0.push(c);
            self.pool.cv.notify_one();
        }
    }
}

fn open_read_only(path: &Path) -> rusqlite::Result<Connection> {
    let conn = Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX)?;
    conn.set_limit(Limit::SQLITE_LIMIT_ATTACHED, 0)?;
    conn.execute_batch("PRAGMA query_only = ON")?;
    Ok(conn)
}

impl Pool {
    fn lease(&self) -> Result<Lease<'_>, Nl2SqlError> {
        let mut st = self.state.lock().expect("pool poisoned");
        loop {
            if let Some(c) = st.0.pop() {
                return Ok(Lease { pool: self, conn: Some(c) });
            }
            if st.1 < self.max {
                st.1 += 1;
                drop(st);
                return match open_read_only(&self.path) {
                    Ok(c) => Ok(Lease { pool: self, conn: Some(c) }),
                    Err(e) => {
                        self.state.lock().expect("pool poisoned").1 -= 1;
                        self.cv.notify_one();
                        Err(Nl2SqlError::Storage(e.to_string()))
                    }
                };
            }
            st = self.cv.wait(st).expect("pool poisoned");
        }
    }
}

/// Read-only executor over registered databases, with a small connection
/// pool per database, a per-statement deadline and a row cap.
pub struct Sandbox {
    registry: DatabaseRegistry,
    config: SandboxConfig,
    pools: Mutex<HashMap<String, Arc<Pool>>>,
    profiles: Mutex<HashMap<String, Arc<DbProfile>>>,
}

impl std::fmt::Debug for Sandbox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Sandbox")
            .field("registry", &self.registry)
            .field("config", &self.config)
            .finish()
    }
}

impl Sandbox {
    pub fn new(registry: DatabaseRegistry, config: SandboxConfig) -> Self {
        Self {
            registry,
            config,
            pools: Mutex::new(HashMap::new()),
            profiles: Mutex::new(HashMap::new()),
        }
    }

    pub fn registry(&self) -> &DatabaseRegistry {
        &self.registry
    }

    pub fn config(&self) -> &SandboxConfig {
        &self.config
    }

    fn pool(&self, db: &str) -> Result<Arc<Pool>, Nl2SqlError> {
        let path = self.registry.path(db)?;
        if !path.is_file() {
            return Err(Nl2SqlError::Storage(format!("database file for '{db}' is missing")));
        }
        let mut pools = self.pools.lock().expect("pools poisoned");
        Ok(pools
            .entry(db.to_string())
            .or_insert_with(|| {
                Arc::new(Pool {
                    path: path.to_path_buf(),
                    max: self.config.pool_size.max(1),
                    state: Mutex::new((Vec::new(), 0)),
                    cv: Condvar::new(),
                })
            })
            .clone())
    }

    /// Profile of `db`, computed once and cached.
    pub fn introspect(&self, db: &str) -> Result<Arc<DbProfile>, Nl2SqlError> {
        if let Some(p) = self.profiles.lock().expect("profiles poisoned").get(db) {
            return Ok(p.clone());
        }
        let profile = Arc::new(introspect_path(db, self.registry.path(db)?)?);
        self.profiles
            .lock()
            .expect("profiles poisoned")
            .insert(db.to_string(), profile.clone());
        Ok(profile)
    }

    /// Validates, then executes.
    pub fn execute(&self, db: &str, sql: &str) -> Result<SqlResult, Nl2SqlError> {
        validate_sql(sql).map_err(Nl2SqlError::Rejected)?;
        self.execute_raw(db, sql)
    }

    /// Executes without the validator. The connection is still read-only.
    pub fn execute_raw(&self, db: &str, sql: &str) -> Result<SqlResult, Nl2SqlError> {
        let pool = self.pool(db)?;
        let lease = pool.lease()?;
        let conn = lease.conn.as_ref().expect("leased connection");
        let path_text = pool.path.display().to_string();
        let sanitize = |e: rusqlite::Error| {
            let msg = e.to_string().replace(&path_text, db);
            Nl2SqlError::Execution(msg)
        };

        let start = Instant::now();
        let deadline = start + Duration::from_millis(self.config.deadline_ms);
        conn.progress_handler(1000, Some(move || Instant::now() > deadline));
        let result = (|| {
            let mut stmt = conn.prepare(sql)?;
            let columns: Vec<String> = stmt.column_names().into_iter().map(str::to_string).collect();
            let n = columns.len();
            let mut rows = Vec::new();
            let mut total = 0u64;
            let mut it = stmt.query([])?;
            while let Some(row) = it.next()? {
                total += 1;
                if rows.len() < self.config.row_cap {
                    let mut vals = Vec::with_capacity(n);
                    for i in 0..n {
                        vals.push(value_to_json(row.get_ref(i)?));
                    }
                    rows.push(vals);
                }
            }
            Ok::<_, rusqlite::Error>((columns, rows, total))
        })();
        conn.progress_handler(0, None::<fn() -> bool>);

        let elapsed_ms = start.elapsed().as_millis() as u64;
        match result {
            Ok((columns, rows, total)) => Ok(SqlResult {
                sql: sql.to_string(),
                columns,
                rows,
                total_row_count: total,
                truncated: total > self.config.row_cap as u64,
                elapsed_ms,
            }),
            Err(rusqlite::Error::SqliteFailure(e, _)) if e.code == rusqlite::ErrorCode::OperationInterrupted => {
                Err(Nl2SqlError::Timeout {
                    ms: self.config.deadline_ms,
                })
            }
            Err(e) => Err(sanitize(e)),
        }
    }
}
