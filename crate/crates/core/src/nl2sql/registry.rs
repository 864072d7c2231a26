use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::Nl2SqlError;

/// Optional BIRD-style directory: `<dir>/<db_id>/<db_id>.sqlite`.
pub const ENV_BIRD_DEV_DIR: &str = "BIRD_DEV_DIR";

/// Maps database ids to SQLite files.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatabaseRegistry {
    entries: BTreeMap<String, PathBuf>,
}

impl DatabaseRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, id: impl Into<String>, path: impl Into<PathBuf>) {
        self.entries.insert(id.into(), path.into());
    }

    pub fn with(mut self, id: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        self.register(id, path);
        self
    }

    /// Registers every `*.sqlite` / `*.db` file in `dir` under its file stem.
    pub fn add_dir(&mut self, dir: &Path) -> Result<usize, Nl2SqlError> {
        let rd = std::fs::read_dir(dir).map_err(|e| Nl2SqlError::Storage(format!("{}: {e}", dir.display())))?;
        let mut n = 0;
        for entry in rd.flatten() {
            let p = entry.path();
            let is_db = p.extension().is_some_and(|x| x == "sqlite" || x == "db");
            if let (true, Some(stem)) = (is_db, p.file_stem().and_then(|s| s.to_str())) {
                self.register(stem.to_string(), p.clone());
                n += 1;
            }
        }
        Ok(n)
    }

    /// Adds databases from the BIRD-style layout under `dir`.
    pub fn add_bird_dir(&mut self, dir: &Path) -> Result<usize, Nl2SqlError> {
        let rd = std::fs::read_dir(dir).map_err(|e| Nl2SqlError::Storage(format!("{}: {e}", dir.display())))?;
        let mut n = 0;
        for entry in rd.flatten() {
            let sub = entry.path();
            let Some(id) = sub.file_name().and_then(|s| s.to_str()).map(str::to_string) else {
                continue;
            };
            let file = sub.join(format!("{id}.sqlite"));
            if file.is_file() {
                self.register(id, file);
                n += 1;
            }
        }
        Ok(n)
    }

    /// Adds the directory named by `BIRD_DEV_DIR`, if set.
    pub fn add_bird_from_env(&mut self) -> Result<usize, Nl2SqlError> {
        match std::env::var_os(ENV_BIRD_DEV_DIR) {
            Some(dir) => self.add_bird_dir(Path::new(&dir)),
            None => Ok(0),
        }
    }

    pub fn path(&self, id: &str) -> Result<&Path, Nl2SqlError> {
        self.entries
            .get(id)
            .map(PathBuf::as_path)
            .ok_or_else(|| Nl2SqlError::NotFound(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}
