//! Seeded SQL fuzz corpus over the financial fixture schema.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    /// Single-statement SELECT or WITH … SELECT.
    Accept,
    /// First keyword is a write or DDL keyword.
    RejectWrite,
    /// More than one statement.
    RejectMulti,
    /// No expectation beyond "the database is untouched".
    Any,
}

const TABLES: &[(&str, &[&str])] = &[
    ("loan", &["loan_id", "account_id", "amount", "duration", "payments", "status", "date"]),
    ("account", &["account_id", "district_id", "frequency", "date"]),
    ("client", &["client_id", "gender", "birth_date", "district_id"]),
    ("district", &["district_id", "name", "region", "avg_salary", "unemployment_rate"]),
    ("disp", &["disp_id", "client_id", "account_id", "type"]),
];

pub const WRITE_HEADS: &[&str] = &[
    "INSERT INTO loan(loan_id, account_id, date, amount, duration, payments, status) VALUES (99999, 1, '2020-01-01', 1, 12, 1.0, 'A')",
    "UPDATE loan SET amount = 0",
    "DELETE FROM loan",
    "DROP TABLE loan",
    "ALTER TABLE loan ADD COLUMN extra INTEGER",
    "CREATE TABLE scratch(a INTEGER)",
    "REPLACE INTO district(district_id, name, region) VALUES (1, 'x', 'y')",
    "ATTACH DATABASE 'other.sqlite' AS other",
    "PRAGMA writable_schema = 1",
    "VACUUM",
    "CREATE INDEX idx_amount ON loan(amount)",
    "DROP VIEW IF EXISTS v",
];

const OTHER_HEADS: &[&str] = &["ANALYZE", "REINDEX", "BEGIN IMMEDIATE", "COMMIT", "SAVEPOINT s1", "DETACH other", "EXPLAIN DELETE FROM loan"];

fn case_noise(rng: &mut ChaCha8Rng, s: &str) -> String {
    match rng.gen_range(0..3) {
        0 => s.to_string(),
        1 => s.to_lowercase(),
        _ => s
            .chars()
            .map(|c| if rng.gen_bool(0.5) { c.to_ascii_lowercase() } else { c.to_ascii_uppercase() })
            .collect(),
    }
}

fn prefix_noise(rng: &mut ChaCha8Rng) -> &'static str {
    ["", "  ", "\n\t", "-- note\n", "/* c */ ", "/* multi\nline */\n"][rng.gen_range(0..6)]
}

fn select(rng: &mut ChaCha8Rng) -> String {
    select_variant(rng, 7)
}

fn select_variant(rng: &mut ChaCha8Rng, variants: u32) -> String {
    let (t, cols) = TABLES[rng.gen_range(0..TABLES.len())];
    let n = rng.gen_range(1..=cols.len().min(3));
    let picked: Vec<&str> = cols.choose_multiple(rng, n).copied().collect();
    let col = cols[rng.gen_range(0..cols.len())];
    match rng.gen_range(0..variants) {
        0 => format!("SELECT {} FROM {t}", picked.join(", ")),
        1 => format!("SELECT {} FROM {t} WHERE {col} IS NOT NULL LIMIT {}", picked.join(", "), rng.gen_range(1..50)),
        2 => format!("SELECT {col}, COUNT(*) AS n FROM {t} GROUP BY {col} ORDER BY n DESC"),
        3 => format!("WITH sub AS (SELECT {col} FROM {t}) SELECT COUNT(*) FROM sub"),
        4 => format!("SELECT 'DELETE FROM {t}; DROP TABLE {t}' AS txt, {col} FROM {t} LIMIT 3"),
        5 => format!("SELECT * FROM {t} WHERE {col} IN (SELECT {col} FROM {t} LIMIT 5);"),
        _ => format!("SELECT \"{col}\" FROM {t} -- trailing comment with UPDATE {t}"),
    }
}

pub fn corpus(seed: u64, n: usize) -> Vec<(String, Expect)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let item = match rng.gen_range(0..8) {
            0 | 1 => (format!("{}{}", prefix_noise(&mut rng), select(&mut rng)), Expect::Accept),
            2 | 3 => {
                let w = WRITE_HEADS[rng.gen_range(0..WRITE_HEADS.len())];
                (format!("{}{}", prefix_noise(&mut rng), case_noise(&mut rng, w)), Expect::RejectWrite)
            }
            4 => {
                let w = WRITE_HEADS[rng.gen_range(0..WRITE_HEADS.len())];
                let sep = [";", "; ", ";\n", " ;  "][rng.gen_range(0..4)];
                // variant 6 ends in a line comment, which would swallow the second statement
                (format!("{}{sep}{}", select_variant(&mut rng, 6), case_noise(&mut rng, w)), Expect::RejectMulti)
            }
            5 => {
                let w = ["DELETE FROM loan", "UPDATE loan SET status = 'A'", "INSERT INTO client SELECT * FROM client"]
                    [rng.gen_range(0..3)];
                (format!("WITH x AS (SELECT 1) {}", case_noise(&mut rng, w)), Expect::Any)
            }
            6 => (OTHER_HEADS[rng.gen_range(0..OTHER_HEADS.len())].to_string(), Expect::Any),
            _ => {
                let words = ["SELECT", "FROM", "loan", "(", ")", ";", "DELETE", "'x'", "*", "WHERE", "1", "=", "--", "UPDATE"];
                let len = rng.gen_range(1..10);
                ((0..len).map(|_| *words.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" "), Expect::Any)
            }
        };
        out.push(item);
    }
    out
}
