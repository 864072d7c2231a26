//! Seeded builders for the bundled fixture databases.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rusqlite::{params, Connection};

use super::Nl2SqlError;

pub const FIXTURE_SEED: u64 = 1995;

fn storage(e: rusqlite::Error) -> Nl2SqlError {
    Nl2SqlError::Storage(e.to_string())
}

fn fresh(path: &Path) -> Result<Connection, Nl2SqlError> {
    if path.exists() {
        std::fs::remove_file(path).map_err(|e| Nl2SqlError::Storage(format!("{}: {e}", path.display())))?;
    }
    Connection::open(path).map_err(storage)
}

fn date(rng: &mut ChaCha8Rng, from_year: i32, to_year: i32) -> String {
    format!(
        "{}-{:02}-{:02}",
        rng.gen_range(from_year..=to_year),
        rng.gen_range(1..=12),
        rng.gen_range(1..=28)
    )
}

const REGIONS: [&str; 4] = ["north", "south", "east", "west"];

/// Retail-bank schema: district, account, client, disp, loan. Small loans
/// default more often than large ones, so "largest loans" and "at-risk
/// loans" pick different accounts.
pub fn build_financial_db(path: &Path, seed: u64) -> Result<(), Nl2SqlError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut conn = fresh(path)?;
    conn.execute_batch(
        "CREATE TABLE district (
            district_id INTEGER PRIMARY KEY,
            name TEXT NOT NULL,
            region TEXT NOT NULL,
            avg_salary INTEGER,
            unemployment_rate REAL
        );
        CREATE TABLE account (
            account_id INTEGER PRIMARY KEY,
            district_id INTEGER NOT NULL REFERENCES district(district_id),
            frequency TEXT NOT NULL,
            date DATE NOT NULL
        );
        CREATE TABLE client (
            client_id INTEGER PRIMARY KEY,
            gender TEXT NOT NULL,
            birth_date DATE NOT NULL,
            district_id INTEGER NOT NULL REFERENCES district(district_id)
        );
        CREATE TABLE disp (
            disp_id INTEGER PRIMARY KEY,
            client_id INTEGER NOT NULL REFERENCES client(client_id),
            account_id INTEGER NOT NULL REFERENCES account(account_id),
            type TEXT NOT NULL
        );
        CREATE TABLE loan (
            loan_id INTEGER PRIMARY KEY,
            account_id INTEGER NOT NULL REFERENCES account(account_id),
            date DATE NOT NULL,
            amount INTEGER NOT NULL,
            duration INTEGER NOT NULL,
            payments REAL NOT NULL,
            status TEXT NOT NULL
        );",
    )
    .map_err(storage)?;

    let tx = conn.transaction().map_err(storage)?;
    let districts = 12;
    for d in 1..=districts {
        let unemployment: f64 = (rng.gen_range(5..=95) as f64) / 10.0;
        let salary = if rng.gen_bool(0.1) {
            None
        } else {
            Some(rng.gen_range(8000..=13000))
        };
        tx.execute(
            "INSERT INTO district VALUES (?1, ?2, ?3, ?4, ?5)",
            params![d, format!("District {d:02}"), REGIONS[(d as usize) % 4], salary, unemployment],
        )
        .map_err(storage)?;
    }

    let frequencies = ["monthly", "weekly", "after transaction"];
    let accounts = 400;
    for a in 1..=accounts {
        let f = if rng.gen_bool(0.8) { frequencies[0] } else { *frequencies[1..].choose(&mut rng).unwrap() };
        tx.execute(
            "INSERT INTO account VALUES (?1, ?2, ?3, ?4)",
            params![a, rng.gen_range(1..=districts), f, date(&mut rng, 1993, 1997)],
        )
        .map_err(storage)?;
    }

    let clients = 500;
    for c in 1..=clients {
        tx.execute(
            "INSERT INTO client VALUES (?1, ?2, ?3, ?4)",
            params![c, if rng.gen_bool(0.5) { "F" } else { "M" }, date(&mut rng, 1935, 1980), rng.gen_range(1..=districts)],
        )
        .map_err(storage)?;
    }

    let mut disp_id = 0;
    for a in 1..=accounts {
        disp_id += 1;
        let owner = ((a - 1) % clients) + 1;
        tx.execute("INSERT INTO disp VALUES (?1, ?2, ?3, 'OWNER')", params![disp_id, owner, a])
            .map_err(storage)?;
        if rng.gen_bool(0.2) {
            disp_id += 1;
            tx.execute(
                "INSERT INTO disp VALUES (?1, ?2, ?3, 'DISPONENT')",
                params![disp_id, rng.gen_range(1..=clients), a],
            )
            .map_err(storage)?;
        }
    }

    let mut loan_accounts: Vec<i64> = (1..=accounts).collect();
    loan_accounts.shuffle(&mut rng);
    for (i, acc) in loan_accounts.iter().take(150).enumerate() {
        let amount: i64 = rng.gen_range(5..=600) * 1000;
        let duration: i64 = [12, 24, 36, 48, 60][rng.gen_range(0..5)];
        let bad_p = if amount < 100_000 { 0.35 } else { 0.08 };
        let running = rng.gen_bool(0.5);
        let status = match (running, rng.gen_bool(bad_p)) {
            (false, false) => "A",
            (false, true) => "B",
            (true, false) => "C",
            (true, true) => "D",
        };
        tx.execute(
            "INSERT INTO loan VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            params![
                i as i64 + 1,
                acc,
                date(&mut rng, 1994, 1998),
                amount,
                duration,
                (amount as f64 / duration as f64 * 100.0).round() / 100.0,
                status
            ],
        )
        .map_err(storage)?;
    }
    tx.commit().map_err(storage)
}

const COUNTIES: [&str; 6] = ["Alameda", "Fresno", "Los Angeles", "Orange", "Sacramento", "San Diego"];

/// School directory with test scores and free-meal eligibility.
pub fn build_schools_db(path: &Path, seed: u64) -> Result<(), Nl2SqlError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5c4);
    let mut conn = fresh(path)?;
    conn.execute_batch(
        "CREATE TABLE schools (
            cds TEXT PRIMARY KEY,
            county TEXT NOT NULL,
            district TEXT NOT NULL,
            school TEXT NOT NULL,
            charter INTEGER NOT NULL,
            open_date DATE
        );
        CREATE TABLE satscores (
            cds TEXT PRIMARY KEY REFERENCES schools(cds),
            num_test_takers INTEGER,
            avg_math INTEGER,
            avg_read INTEGER,
            avg_write INTEGER
        );
        CREATE TABLE frpm (
            cds TEXT PRIMARY KEY REFERENCES schools(cds),
            enrollment INTEGER NOT NULL,
            free_meal_count INTEGER NOT NULL,
            percent_eligible_free REAL NOT NULL
        );",
    )
    .map_err(storage)?;
    let tx = conn.transaction().map_err(storage)?;
    for i in 0..240 {
        let county = COUNTIES[rng.gen_range(0..COUNTIES.len())];
        let cds = format!("{:02}{:05}{:07}", i % 58, rng.gen_range(10000..99999), 1_000_000 + i);
        let charter = rng.gen_bool(0.2) as i64;
        let open = (!rng.gen_bool(0.15)).then(|| date(&mut rng, 1950, 2015));
        tx.execute(
            "INSERT INTO schools VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
            params![cds, county, format!("{county} Unified {}", i % 7), format!("School {i:03}"), charter, open],
        )
        .map_err(storage)?;
        let enrollment: i64 = rng.gen_range(150..=3000);
        let poverty: f64 = rng.gen_range(0.05..0.95);
        let free = (enrollment as f64 * poverty).round() as i64;
        tx.execute(
            "INSERT INTO frpm VALUES (?1, ?2, ?3, ?4)",
            params![cds, enrollment, free, (free as f64 / enrollment as f64 * 10000.0).round() / 10000.0],
        )
        .map_err(storage)?;
        if rng.gen_bool(0.75) {
            let base = 560.0 - 180.0 * poverty;
            let takers: i64 = rng.gen_range(5..=enrollment / 4);
            let jitter = |rng: &mut ChaCha8Rng| (base + rng.gen_range(-40.0..40.0)).round() as i64;
            let (m, r, w) = (jitter(&mut rng), jitter(&mut rng), jitter(&mut rng));
            tx.execute(
                "INSERT INTO satscores VALUES (?1, ?2, ?3, ?4, ?5)",
                params![cds, takers, m, r, w],
            )
            .map_err(storage)?;
        }
    }
    tx.commit().map_err(storage)
}

/// Builds `financial.sqlite` and `schools.sqlite` into `dir`.
pub fn build_fixture_dbs(dir: &Path, seed: u64) -> Result<(), Nl2SqlError> {
    std::fs::create_dir_all(dir).map_err(|e| Nl2SqlError::Storage(format!("{}: {e}", dir.display())))?;
    build_financial_db(&dir.join("financial.sqlite"), seed)?;
    build_schools_db(&dir.join("schools.sqlite"), seed)
}
