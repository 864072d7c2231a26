use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use rusqlite::types::ValueRef;
use rusqlite::{Connection, OpenFlags};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::sandbox::value_to_json;
use super::Nl2SqlError;

/// Tables above this many rows are profiled from a seeded sample of this size.
pub const SAMPLE_CAP: u64 = 100_000;
const SAMPLE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeClass {
    Temporal,
    Categorical,
    Numerical,
    Text,
    Unknown,
}

impl TypeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TypeClass::Temporal => "temporal",
            TypeClass::Categorical => "categorical",
            TypeClass::Numerical => "numerical",
            TypeClass::Text => "text",
            TypeClass::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopValue {
    pub value: Value,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub name: String,
    pub declared_type: String,
    pub type_class: TypeClass,
    pub null_rate: f64,
    pub distinct_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<Value>,
    pub top_values: Vec<TopValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableProfile {
    pub name: String,
    pub row_count: u64,
    /// True when column statistics come from a sample rather than a full scan.
    pub sampled: bool,
    pub columns: Vec<ColumnProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbProfile {
    pub database_id: String,
    pub tables: Vec<TableProfile>,
}

/// Inputs to [`classify_column`], computed over the profiled rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub row_count: u64,
    pub non_null: u64,
    pub distinct: u64,
    /// Number of non-null values that look like a date or time.
    pub temporal_matches: u64,
}

fn temporal_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^(\d{4}[-/]\d{1,2}[-/]\d{1,2}([T ]\d{1,2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?|\d{1,2}:\d{2}(:\d{2})?|\d{4}-\d{2})$",
        )
        .expect("valid regex")
    })
}

/// True when `s` reads as a date, date-time, year-month or time of day.
pub fn looks_temporal_value(s: &str) -> bool {
    temporal_regex().is_match(s.trim())
}

const NUMERIC_TYPE_MARKERS: [&str; 7] = ["INT", "REAL", "FLOA", "DOUB", "NUMERIC", "DECIMAL", "NUMBER"];

/// Rules, first match wins: numeric declared type, at least 90% of
/// non-null values temporal-looking, low cardinality (ratio ≤ 0.05 or at
/// most 20 distinct values), otherwise text. Columns without any non-null
/// value are `Unknown` unless their declared type is numeric.
pub fn classify_column(declared_type: &str, stats: &ColumnStats) -> TypeClass {
    let upper = declared_type.to_ascii_uppercase();
    if NUMERIC_TYPE_MARKERS.iter().any(|m| upper.contains(m)) {
        return TypeClass::Numerical;
    }
    if stats.non_null == 0 {
        return TypeClass::Unknown;
    }
    if stats.temporal_matches as f64 >= 0.9 * stats.non_null as f64 {
        return TypeClass::Temporal;
    }
    let ratio = stats.distinct as f64 / stats.row_count.max(1) as f64;
    if ratio <= 0.05 || stats.distinct <= 20 {
        return TypeClass::Categorical;
    }
    TypeClass::Text
}

fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

impl DbProfile {
    pub fn empty(database_id: &str) -> Self {
        Self {
            database_id: database_id.to_string(),
            tables: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&TableProfile> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    /// Every column as `table.column`.
    pub fn column_ids(&self) -> Vec<String> {
        self.tables
            .iter()
            .flat_map(|t| t.columns.iter().map(move |c| format!("{}.{}", t.name, c.name)))
            .collect()
    }

    pub fn has_column(&self, id: &str) -> bool {
        let Some((t, c)) = id.split_once('.') else {
            return false;
        };
        self.table(t)
            .is_some_and(|t| t.columns.iter().any(|col| col.name.eq_ignore_ascii_case(c)))
    }

    pub fn ddl_summary(&self) -> String {
        self.tables
            .iter()
            .map(|t| {
                let cols: Vec<String> = t
                    .columns
                    .iter()
                    .map(|c| format!("{} {}", c.name, c.declared_type).trim_end().to_string())
                    .collect();
                format!("CREATE TABLE {} ({}); -- {} rows", t.name, cols.join(", "), t.row_count)
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// One line per column: class, null rate, distinct count, up to three
    /// top values and the range when known.
    pub fn distribution_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.tables {
            for c in &t.columns {
                let mut line = format!(
                    "{}.{}: {}, null {:.1}%, {} distinct",
                    t.name,
                    c.name,
                    c.type_class.as_str(),
                    c.null_rate * 100.0,
                    c.distinct_count
                );
                if let (Some(lo), Some(hi)) = (&c.min, &c.max) {
                    line.push_str(&format!(", range {lo}..{hi}"));
                }
                if !c.top_values.is_empty() {
                    let tops: Vec<String> = c
                        .top_values
                        .iter()
                        .take(3)
                        .map(|tv| format!("{} ({})", tv.value, tv.count))
                        .collect();
                    line.push_str(&format!(", top {}", tops.join(", ")));
                }
                out.push(line);
            }
        }
        out
    }
}

/// Profiles the SQLite file at `path` (opened read-only).
pub fn introspect_path(database_id: &str, path: &Path) -> Result<DbProfile, Nl2SqlError> {
    if !path.is_file() {
        return Err(Nl2SqlError::Storage(format!("database file for '{database_id}' is missing")));
    }
    let conn = Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX)
        .map_err(|e| Nl2SqlError::Storage(format!("{database_id}: {e}")))?;
    let storage = |e: rusqlite::Error| Nl2SqlError::Storage(format!("{database_id}: {e}"));

    let mut stmt = conn
        .prepare("SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name")
        .map_err(storage)?;
    let names: Vec<String> = stmt
        .query_map([], |r| r.get(0))
        .map_err(storage)?
        .collect::<Result<_, _>>()
        .map_err(storage)?;

    let mut tables = Vec::new();
    for name in names {
        tables.push(profile_table(&conn, &name).map_err(storage)?);
    }
    Ok(DbProfile {
        database_id: database_id.to_string(),
        tables,
    })
}

fn profile_table(conn: &Connection, table: &str) -> rusqlite::Result<TableProfile> {
    let qt = quote_ident(table);
    let row_count: u64 = conn.query_row(&format!("SELECT COUNT(*) FROM {qt}"), [], |r| r.get::<_, i64>(0))? as u64;
    let sampled = row_count > SAMPLE_CAP;
    // Seeded pseudo-random order over rowid keeps the sample reproducible.
    let source = if sampled {
        let with_rowid = format!(
            "(SELECT * FROM {qt} ORDER BY ((rowid * 2654435761 + {SAMPLE_SEED}) % 4294967291) LIMIT {SAMPLE_CAP})"
        );
        match conn.prepare(&format!("SELECT 1 FROM {with_rowid} LIMIT 1")) {
            Ok(_) => with_rowid,
            Err(_) => format!("(SELECT * FROM {qt} LIMIT {SAMPLE_CAP})"),
        }
    } else {
        qt.clone()
    };
    let profiled_rows = row_count.min(SAMPLE_CAP);

    let mut info = conn.prepare(&format!("PRAGMA table_info({qt})"))?;
    let cols: Vec<(String, String)> = info
        .query_map([], |r| Ok((r.get::<_, String>(1)?, r.get::<_, Option<String>>(2)?.unwrap_or_default())))?
        .collect::<Result<_, _>>()?;

    let mut columns = Vec::new();
    for (name, declared) in cols {
        columns.push(profile_column(conn, &source, profiled_rows, &name, &declared)?);
    }
    Ok(TableProfile {
        name: table.to_string(),
        row_count,
        sampled,
        columns,
    })
}

fn profile_column(
    conn: &Connection,
    source: &str,
    rows: u64,
    name: &str,
    declared: &str,
) -> rusqlite::Result<ColumnProfile> {
    let qc = quote_ident(name);
    let (non_null, distinct): (i64, i64) = conn.query_row(
        &format!("SELECT COUNT({qc}), COUNT(DISTINCT {qc}) FROM {source}"),
        [],
        |r| Ok((r.get(0)?, r.get(1)?)),
    )?;

    let mut temporal_matches = 0u64;
    let mut groups = conn.prepare(&format!(
        "SELECT {qc}, COUNT(*) AS n FROM {source} WHERE {qc} IS NOT NULL GROUP BY {qc} ORDER BY n DESC, {qc}"
    ))?;
    let mut top_values = Vec::new();
    let mut it = groups.query([])?;
    while let Some(row) = it.next()? {
        let n = row.get::<_, i64>(1)? as u64;
        let v = row.get_ref(0)?;
        if let ValueRef::Text(t) = v {
            if looks_temporal_value(&String::from_utf8_lossy(t)) {
                temporal_matches += n;
            }
        }
        if top_values.len() < 5 {
            top_values.push(TopValue {
                value: value_to_json(v),
                count: n,
            });
        }
    }

    let stats = ColumnStats {
        row_count: rows,
        non_null: non_null as u64,
        distinct: distinct as u64,
        temporal_matches,
    };
    let type_class = classify_column(declared, &stats);
    let (min, max) = match type_class {
        TypeClass::Numerical | TypeClass::Temporal if non_null > 0 => conn.query_row(
            &format!("SELECT MIN({qc}), MAX({qc}) FROM {source}"),
            [],
            |r| Ok((Some(value_to_json(r.get_ref(0)?)), Some(value_to_json(r.get_ref(1)?)))),
        )?,
        _ => (None, None),
    };
    let null_rate = if rows == 0 {
        0.0
    } else {
        (rows - non_null as u64) as f64 / rows as f64
    };
    Ok(ColumnProfile {
        name: name.to_string(),
        declared_type: declared.to_string(),
        type_class,
        null_rate,
        distinct_count: distinct as u64,
        min,
        max,
        top_values,
    })
}
