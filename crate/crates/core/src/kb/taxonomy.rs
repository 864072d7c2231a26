use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The taxonomy shipped with the crate.
pub const BUILTIN_TAXONOMY: &str = include_str!("../../data/bias_taxonomy.toml");

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing taxonomy: {0}")]
    Parse(String),
    #[error("taxonomy count mismatch: {0}")]
    CountMismatch(String),
    #[error("duplicate bias id '{0}'")]
    DuplicateId(String),
    #[error("question is empty")]
    EmptyQuestion,
    #[error("invalid entry '{id}': {reason}")]
    InvalidEntry { id: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasCategory {
    Memory,
    Statistical,
    Confidence,
    Methodological,
    FramingContextual,
}

impl BiasCategory {
    pub const ALL: [BiasCategory; 5] = [
        BiasCategory::Memory,
        BiasCategory::Statistical,
        BiasCategory::Confidence,
        BiasCategory::Methodological,
        BiasCategory::FramingContextual,
    ];

    /// Number of entries a valid taxonomy holds in this category.
    pub fn expected_count(self) -> usize {
        match self {
            BiasCategory::Memory => 8,
            BiasCategory::Statistical => 9,
            BiasCategory::Confidence => 8,
            BiasCategory::Methodological => 12,
            BiasCategory::FramingContextual => 16,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BiasCategory::Memory => "memory",
            BiasCategory::Statistical => "statistical",
            BiasCategory::Confidence => "confidence",
            BiasCategory::Methodological => "methodological",
            BiasCategory::FramingContextual => "framing-contextual",
        }
    }
}

impl fmt::Display for BiasCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BiasCategory {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown bias category '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasEntry {
    pub id: String,
    pub name: String,
    pub category: BiasCategory,
    pub description: String,
    #[serde(default)]
    pub cues: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct TaxonomyFile {
    version: u32,
    #[serde(rename = "bias")]
    entries: Vec<BiasEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiasTaxonomy {
    version: u32,
    entries: Vec<BiasEntry>,
}

impl BiasTaxonomy {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TAXONOMY).expect("shipped taxonomy is valid")
    }

    pub fn parse(text: &str) -> Result<Self, KbError> {
        let file: TaxonomyFile = toml::from_str(text).map_err(|e| KbError::Parse(e.to_string()))?;
        Self::from_entries(file.version, file.entries)
    }

    /// Validates counts, id uniqueness and required fields.
    pub fn from_entries(version: u32, entries: Vec<BiasEntry>) -> Result<Self, KbError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.id.trim().is_empty() {
                return Err(KbError::InvalidEntry {
                    id: e.id.clone(),
                    reason: "empty id".into(),
                });
            }
            if e.name.trim().is_empty() || e.description.trim().is_empty() {
                return Err(KbError::InvalidEntry {
                    id: e.id.clone(),
                    reason: "name and description are required".into(),
                });
            }
            if !seen.insert(e.id.as_str()) {
                return Err(KbError::DuplicateId(e.id.clone()));
            }
        }
        let counts = count_by_category(&entries);
        let mismatches: Vec<String> = BiasCategory::ALL
            .into_iter()
            .filter_map(|c| {
                let actual = counts.get(&c).copied().unwrap_or(0);
                (actual != c.expected_count())
                    .then(|| format!("{c}: expected {}, found {actual}", c.expected_count()))
            })
            .collect();
        if !mismatches.is_empty() {
            return Err(KbError::CountMismatch(format!(
                "{} ({} entries total)",
                mismatches.join("; "),
                entries.len()
            )));
        }
        Ok(Self { version, entries })
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn entries(&self) -> &[BiasEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&BiasEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn category_counts(&self) -> BTreeMap<BiasCategory, usize> {
        count_by_category(&self.entries)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&TaxonomyFile {
            version: self.version,
            entries: self.entries.clone(),
        })
        .expect("taxonomy serializes")
    }
}

fn count_by_category(entries: &[BiasEntry]) -> BTreeMap<BiasCategory, usize> {
    let mut m = BTreeMap::new();
    for e in entries {
        *m.entry(e.category).or_insert(0) += 1;
    }
    m
}

pub fn load_taxonomy(path: &Path) -> Result<BiasTaxonomy, KbError> {
    let text = std::fs::read_to_string(path).map_err(|source| KbError::Io {
        path: path.display().to_string(),
        source,
    })?;
    BiasTaxonomy::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_expected_shape() {
        let t = BiasTaxonomy::builtin();
        assert_eq!(t.len(), 53);
        let counts: Vec<usize> = BiasCategory::ALL.iter().map(|c| t.category_counts()[c]).collect();
        assert_eq!(counts, vec![8, 9, 8, 12, 16]);
    }

    #[test]
    fn short_category_is_named() {
        let t = BiasTaxonomy::builtin();
        let mut entries = t.entries().to_vec();
        let i = entries.iter().position(|e| e.category == BiasCategory::Confidence).unwrap();
        entries.remove(i);
        let err = BiasTaxonomy::from_entries(1, entries).unwrap_err().to_string();
        assert!(err.contains("confidence: expected 8, found 7"), "{err}");
        assert!(!err.contains("memory"));
    }

    #[test]
    fn duplicate_id_rejected() {
        let t = BiasTaxonomy::builtin();
        let mut entries = t.entries().to_vec();
        entries[1].id = entries[0].id.clone();
        assert!(matches!(BiasTaxonomy::from_entries(1, entries), Err(KbError::DuplicateId(_))));
    }

    #[test]
    fn round_trip() {
        let t = BiasTaxonomy::builtin();
        assert_eq!(BiasTaxonomy::parse(&t.to_toml()).unwrap(), t);
    }

    #[test]
    fn unknown_category_is_parse_error() {
        let text = BUILTIN_TAXONOMY.replacen("category = \"memory\"", "category = \"mood\"", 1);
        assert!(matches!(BiasTaxonomy::parse(&text), Err(KbError::Parse(_))));
    }
}
