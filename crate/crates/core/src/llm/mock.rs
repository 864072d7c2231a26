//! Deterministic fixture-driven backend.
//!
//! A fixture file is a JSON array of entries:
//!
//! ```json
//! [
//!   { "hash": "9f2c…", "content": "…" },
//!   { "tag": "stage1:template-01", "contains": ["largest loans"], "content": "…" },
//!   { "tag_prefix": "stage2:critic-", "content": "…" }
//! ]
//! ```
//!
//! Lookup order: an entry whose `hash` equals the canonical request hash
//! wins. Otherwise the first entry (files in name order, entries in file
//! order) whose every given condition holds is used: `tag` equal,
//! `tag_prefix` a prefix of the tag, and each `contains` string present in
//! the canonical user text. Unmatched requests get a fallback message that
//! names the tag.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::types::{BackendKind, ChatRequest, ChatResponse, Role};
use super::{BackendError, ChatBackend, LlmError};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag_prefix: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contains: Vec<String>,
    pub content: String,
}

impl Fixture {
    pub fn for_tag(tag: impl Into<String>, content: impl Into<String>) -> Self {
        Self {
            tag: Some(tag.into()),
            content: content.into(),
            ..Self::default()
        }
    }

    pub fn for_prefix(prefix: impl Into<String>, content: impl Into<String>) -> Self {
        Self {
            tag_prefix: Some(prefix.into()),
            content: content.into(),
            ..Self::default()
        }
    }

    pub fn containing(mut self, needle: impl Into<String>) -> Self {
        self.contains.push(needle.into());
        self
    }

    fn has_condition(&self) -> bool {
        self.tag.is_some() || self.tag_prefix.is_some() || !self.contains.is_empty()
    }

    fn matches(&self, tag: &str, user_text: &str) -> bool {
        self.has_condition()
            && self.tag.as_deref().is_none_or(|t| t == tag)
            && self.tag_prefix.as_deref().is_none_or(|p| tag.starts_with(p))
            && self
                .contains
                .iter()
                .all(|c| user_text.contains(&normalize_whitespace(c)))
    }
}

/// Trims and collapses runs of whitespace to single spaces.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Hex SHA-256 over each message's role and whitespace-normalized content.
/// Model, sampling parameters and tag do not participate.
pub fn canonical_hash(req: &ChatRequest) -> String {
    let mut hasher = Sha256::new();
    for m in &req.messages {
        hasher.update(m.role.as_str().as_bytes());
        hasher.update(b"\n");
        hasher.update(normalize_whitespace(&m.content).as_bytes());
        hasher.update([0x1e]);
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn canonical_user_text(req: &ChatRequest) -> String {
    req.messages
        .iter()
        .filter(|m| m.role == Role::User)
        .map(|m| normalize_whitespace(&m.content))
        .collect::<Vec<_>>()
        .join("\n")
}

fn word_count(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    fixtures: Vec<Fixture>,
    by_hash: BTreeMap<String, usize>,
}

/// The fixture set shipped with the crate, in lookup order.
pub const BUILTIN_FIXTURES: [(&str, &str); 3] = [
    ("10-loans.json", include_str!("../../fixtures/llm/10-loans.json")),
    ("50-scenarios.json", include_str!("../../fixtures/llm/50-scenarios.json")),
    ("90-generic.json", include_str!("../../fixtures/llm/90-generic.json")),
];

impl MockBackend {
    /// Backend over [`BUILTIN_FIXTURES`].
    pub fn builtin() -> Self {
        let mut fixtures = Vec::new();
        for (name, text) in BUILTIN_FIXTURES {
            let mut batch: Vec<Fixture> =
                serde_json::from_str(text).unwrap_or_else(|e| panic!("bundled fixture {name} is invalid: {e}"));
            fixtures.append(&mut batch);
        }
        Self::new(fixtures)
    }

    pub fn new(fixtures: Vec<Fixture>) -> Self {
        let mut by_hash = BTreeMap::new();
        for (i, f) in fixtures.iter().enumerate() {
            if let Some(h) = &f.hash {
                by_hash.entry(h.clone()).or_insert(i);
            }
        }
        Self { fixtures, by_hash }
    }

    /// Loads every `*.json` file in `dir`, in file-name order.
    pub fn from_dir(dir: &Path) -> Result<Self, LlmError> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| LlmError::Config(format!("fixture dir {}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut fixtures = Vec::new();
        for p in paths {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| LlmError::Config(format!("{}: {e}", p.display())))?;
            let mut batch: Vec<Fixture> = serde_json::from_str(&text)
                .map_err(|e| LlmError::Config(format!("{}: {e}", p.display())))?;
            fixtures.append(&mut batch);
        }
        Ok(Self::new(fixtures))
    }

    pub fn with_fixtures(mut self, extra: impl IntoIterator<Item = Fixture>) -> Self {
        // later fixtures are consulted first
        let mut all: Vec<Fixture> = extra.into_iter().collect();
        all.append(&mut self.fixtures);
        Self::new(all)
    }

    pub fn fixtures(&self) -> &[Fixture] {
        &self.fixtures
    }

    pub fn lookup(&self, req: &ChatRequest) -> Option<&Fixture> {
        if let Some(&i) = self.by_hash.get(&canonical_hash(req)) {
            return Some(&self.fixtures[i]);
        }
        let user = canonical_user_text(req);
        self.fixtures.iter().find(|f| f.matches(&req.tag, &user))
    }

    pub fn fallback_content(tag: &str) -> String {
        format!("[mock] no scripted response for request tagged '{tag}'")
    }
}

impl ChatBackend for MockBackend {
    fn send(&self, req: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let content = match self.lookup(req) {
            Some(f) => f.content.clone(),
            None => Self::fallback_content(&req.tag),
        };
        let prompt_tokens = req.messages.iter().map(|m| word_count(&m.content)).sum();
        Ok(ChatResponse {
            completion_tokens: word_count(&content),
            content,
            prompt_tokens,
            latency_ms: 0,
            backend: BackendKind::Mock,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ChatMessage;

    fn req(tag: &str, user: &str) -> ChatRequest {
        ChatRequest::new(tag, vec![ChatMessage::system("sys"), ChatMessage::user(user)])
    }

    #[test]
    fn hash_ignores_whitespace_noise_and_tag() {
        let a = req("a", "  hello\n\n world ");
        let b = req("b", "hello world");
        assert_eq!(canonical_hash(&a), canonical_hash(&b));
        assert_ne!(canonical_hash(&a), canonical_hash(&req("a", "hello there")));
    }

    #[test]
    fn hash_fixture_is_byte_identical() {
        let r = req("t", "question");
        let content = "line one\n  line two  \n";
        let mock = MockBackend::new(vec![Fixture {
            hash: Some(canonical_hash(&r)),
            content: content.into(),
            ..Fixture::default()
        }]);
        assert_eq!(mock.send(&r).unwrap().content, content);
    }

    #[test]
    fn first_matching_condition_wins() {
        let mock = MockBackend::new(vec![
            Fixture::for_tag("sql", "specific").containing("largest   loans"),
            Fixture::for_tag("sql", "generic"),
            Fixture::for_prefix("stage2:", "critic"),
        ]);
        assert_eq!(mock.send(&req("sql", "the largest loans")).unwrap().content, "specific");
        assert_eq!(mock.send(&req("sql", "other")).unwrap().content, "generic");
        assert_eq!(mock.send(&req("stage2:critic-1", "x")).unwrap().content, "critic");
    }

    #[test]
    fn unmatched_requests_get_tagged_fallback() {
        let mock = MockBackend::default();
        let r = mock.send(&req("stage9:x", "q")).unwrap();
        assert!(r.content.contains("stage9:x"));
        assert_eq!(r.backend, BackendKind::Mock);
        assert_eq!(r, mock.send(&req("stage9:x", "q")).unwrap());
    }

    #[test]
    fn conditionless_fixture_never_matches() {
        let mock = MockBackend::new(vec![Fixture {
            content: "x".into(),
            ..Fixture::default()
        }]);
        assert!(mock.lookup(&req("t", "q")).is_none());
    }
}
