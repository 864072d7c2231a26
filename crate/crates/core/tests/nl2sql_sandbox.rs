mod support;

use std::path::Path;

use askwell_core::nl2sql::{
    build_fixture_dbs, introspect_path, validate_sql, DatabaseRegistry, Nl2SqlError, Sandbox, SandboxConfig,
    TypeClass, ViolationKind, FIXTURE_SEED,
};
use sha2::{Digest, Sha256};
use support::sql_corpus::{corpus, Expect};

fn digest(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

fn setup(config: SandboxConfig) -> (tempfile::TempDir, Sandbox) {
    let dir = tempfile::tempdir().unwrap();
    build_fixture_dbs(dir.path(), FIXTURE_SEED).unwrap();
    let mut reg = DatabaseRegistry::new();
    reg.add_dir(dir.path()).unwrap();
    (dir, Sandbox::new(reg, config))
}

#[test]
fn fuzz_corpus_never_mutates_the_database() {
    let (dir, sb) = setup(SandboxConfig {
        deadline_ms: 2000,
        ..SandboxConfig::default()
    });
    let path = dir.path().join("financial.sqlite");
    let before = digest(&path);
    let items = corpus(20250101, 600);
    assert!(items.len() >= 500);
    let mut executed = 0;
    for (sql, expect) in &items {
        let verdict = validate_sql(sql);
        match expect {
            Expect::Accept => assert!(verdict.is_ok(), "{sql:?}: {verdict:?}"),
            Expect::RejectWrite => {
                let v = verdict.expect_err(sql);
                assert_eq!(v.kind, ViolationKind::WriteStatement, "{sql:?}");
            }
            Expect::RejectMulti => assert!(verdict.is_err(), "{sql:?}"),
            Expect::Any => {}
        }
        if sb.execute("financial", sql).is_ok() {
            executed += 1;
        }
        // bypass the validator: the read-only connection is the guarantee
        let _ = sb.execute_raw("financial", sql);
    }
    assert!(executed > 100);
    assert_eq!(before, digest(&path));
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().to_string())
        .filter(|n| !n.ends_with(".sqlite"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn row_cap_truncates() {
    let (_d, sb) = setup(SandboxConfig::default());
    let r = sb
        .execute(
            "financial",
            "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c WHERE x < 5000) SELECT x FROM c",
        )
        .unwrap();
    assert_eq!(r.rows.len(), 1000);
    assert_eq!(r.total_row_count, 5000);
    assert!(r.truncated);
    let r = sb.execute("financial", "SELECT 1").unwrap();
    assert_eq!(r.rows, vec![vec![serde_json::json!(1)]]);
    assert!(!r.truncated);
}

#[test]
fn deadline_is_enforced() {
    let (_d, sb) = setup(SandboxConfig {
        deadline_ms: 200,
        ..SandboxConfig::default()
    });
    let started = std::time::Instant::now();
    let r = sb.execute(
        "financial",
        "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT COUNT(*) FROM c",
    );
    assert!(matches!(r, Err(Nl2SqlError::Timeout { .. })), "{r:?}");
    assert!(started.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn engine_errors_surface() {
    let (_d, sb) = setup(SandboxConfig::default());
    assert!(matches!(sb.execute("financial", "SELECT nope FROM loan"), Err(Nl2SqlError::Execution(_))));
    assert!(matches!(sb.execute("missing", "SELECT 1"), Err(Nl2SqlError::NotFound(_))));
}

#[test]
fn profile_is_byte_stable_and_classified() {
    let (dir, sb) = setup(SandboxConfig::default());
    let path = dir.path().join("financial.sqlite");
    let a = serde_json::to_string(&introspect_path("financial", &path).unwrap()).unwrap();
    let b = serde_json::to_string(&introspect_path("financial", &path).unwrap()).unwrap();
    assert_eq!(a, b);

    let p = sb.introspect("financial").unwrap();
    let col = |t: &str, c: &str| {
        p.table(t)
            .unwrap()
            .columns
            .iter()
            .find(|x| x.name == c)
            .unwrap()
            .clone()
    };
    assert_eq!(col("loan", "date").type_class, TypeClass::Temporal);
    assert_eq!(col("loan", "status").type_class, TypeClass::Categorical);
    assert_eq!(col("loan", "amount").type_class, TypeClass::Numerical);
    assert_eq!(col("district", "name").type_class, TypeClass::Categorical);
    assert_eq!(col("client", "gender").type_class, TypeClass::Categorical);
    for t in &p.tables {
        for c in &t.columns {
            assert!((0.0..=1.0).contains(&c.null_rate));
            assert!(c.distinct_count <= t.row_count);
            assert!(c.top_values.len() <= 5);
            assert!(c.top_values.windows(2).all(|w| w[0].count >= w[1].count));
        }
    }
}

#[test]
fn empty_table_and_categorical_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.sqlite");
    let c = rusqlite::Connection::open(&path).unwrap();
    c.execute_batch(
        "CREATE TABLE empty(a TEXT, b REAL);
         CREATE TABLE flags(flag TEXT, d TEXT);
         WITH RECURSIVE n(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM n WHERE x < 1000)
         INSERT INTO flags SELECT CASE x % 2 WHEN 0 THEN 'yes' ELSE 'no' END, date('2020-01-01', '+' || x || ' days') FROM n;",
    )
    .unwrap();
    drop(c);
    let p = introspect_path("t", &path).unwrap();
    let empty = p.table("empty").unwrap();
    assert_eq!(empty.row_count, 0);
    for c in &empty.columns {
        assert_eq!((c.null_rate, c.distinct_count, c.top_values.len()), (0.0, 0, 0));
    }
    assert_eq!(empty.columns[1].type_class, TypeClass::Numerical);
    let flags = p.table("flags").unwrap();
    assert_eq!(flags.columns[0].type_class, TypeClass::Categorical);
    assert_eq!(flags.columns[1].type_class, TypeClass::Temporal);
}
