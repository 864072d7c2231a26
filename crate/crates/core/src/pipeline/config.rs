//! Prompt templates and critic personas, one TOML file each.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::PipelineError;

pub const TEMPLATE_COUNT: usize = 12;
pub const CRITIC_COUNT: usize = 3;

/// Placeholder names a template may use.
pub const PLACEHOLDERS: [&str; 6] = ["question", "context", "schema", "biases", "toulmin", "counterargs"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: u8,
    pub angle: String,
    #[serde(rename = "system")]
    pub system_text: String,
    #[serde(rename = "user")]
    pub user_pattern: String,
}

fn placeholder_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([A-Za-z_]+)\}").expect("valid regex"))
}

impl PromptTemplate {
    pub fn placeholders(&self) -> Vec<String> {
        placeholder_regex()
            .captures_iter(&self.user_pattern)
            .map(|c| c[1].to_string())
            .collect()
    }

    /// Substitutes every placeholder; `values` must cover all of them.
    pub fn render(&self, values: &BTreeMap<&str, String>) -> String {
        placeholder_regex()
            .replace_all(&self.user_pattern, |c: &regex::Captures| {
                values.get(&c[1]).cloned().unwrap_or_default()
            })
            .trim()
            .to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: Vec<PromptTemplate>,
}

const BUILTIN_TEMPLATES: [&str; TEMPLATE_COUNT] = [
    include_str!("../../config/templates/01-vulnerability-detection.toml"),
    include_str!("../../config/templates/02-schema-validation.toml"),
    include_str!("../../config/templates/03-temporal-framing.toml"),
    include_str!("../../config/templates/04-base-rate-grounding.toml"),
    include_str!("../../config/templates/05-counterfactual-probing.toml"),
    include_str!("../../config/templates/06-segmentation-drilldown.toml"),
    include_str!("../../config/templates/07-metric-definition.toml"),
    include_str!("../../config/templates/08-data-quality-audit.toml"),
    include_str!("../../config/templates/09-comparative-baseline.toml"),
    include_str!("../../config/templates/10-causal-confound-check.toml"),
    include_str!("../../config/templates/11-scope-qualifier.toml"),
    include_str!("../../config/templates/12-decision-alignment.toml"),
];

const BUILTIN_CRITICS: [&str; CRITIC_COUNT] = [
    include_str!("../../config/critics/1-insight.toml"),
    include_str!("../../config/critics/2-logic.toml"),
    include_str!("../../config/critics/3-bias-mitigation.toml"),
];

fn read_toml_dir<T: serde::de::DeserializeOwned>(dir: &Path) -> Result<Vec<T>, PipelineError> {
    let cfg = |m: String| PipelineError::Config(m);
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| cfg(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| cfg(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| cfg(format!("{}: {e}", p.display())))
        })
        .collect()
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let templates = BUILTIN_TEMPLATES
            .iter()
            .map(|t| toml::from_str(t).expect("builtin template parses"))
            .collect();
        Self::new(templates).expect("builtin templates are valid")
    }

    pub fn load_dir(dir: &Path) -> Result<Self, PipelineError> {
        Self::new(read_toml_dir(dir)?)
    }

    pub fn new(mut templates: Vec<PromptTemplate>) -> Result<Self, PipelineError> {
        if templates.len() != TEMPLATE_COUNT {
            return Err(PipelineError::Config(format!(
                "expected {TEMPLATE_COUNT} templates, found {}",
                templates.len()
            )));
        }
        templates.sort_by_key(|t| t.id);
        for (i, t) in templates.iter().enumerate() {
            if t.id as usize != i + 1 {
                return Err(PipelineError::Config(format!(
                    "template ids must be 1..{TEMPLATE_COUNT} without gaps or duplicates (saw {} at position {})",
                    t.id,
                    i + 1
                )));
            }
            if t.angle.trim().is_empty() || t.user_pattern.trim().is_empty() {
                return Err(PipelineError::Config(format!("template {} is missing angle or user text", t.id)));
            }
            if let Some(bad) = t.placeholders().into_iter().find(|p| !PLACEHOLDERS.contains(&p.as_str())) {
                return Err(PipelineError::Config(format!("template {} uses unknown placeholder {{{bad}}}", t.id)));
            }
        }
        Ok(Self { templates })
    }

    pub fn templates(&self) -> &[PromptTemplate] {
        &self.templates
    }

    pub fn get(&self, id: u8) -> Option<&PromptTemplate> {
        self.templates.get((id as usize).checked_sub(1)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticPersona {
    pub id: u8,
    pub name: String,
    pub focus: String,
    pub system: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticPanel {
    critics: Vec<CriticPersona>,
}

impl CriticPanel {
    pub fn builtin() -> Self {
        let critics = BUILTIN_CRITICS
            .iter()
            .map(|t| toml::from_str(t).expect("builtin critic parses"))
            .collect();
        Self::new(critics).expect("builtin critics are valid")
    }

    pub fn load_dir(dir: &Path) -> Result<Self, PipelineError> {
        Self::new(read_toml_dir(dir)?)
    }

    pub fn new(mut critics: Vec<CriticPersona>) -> Result<Self, PipelineError> {
        critics.sort_by_key(|c| c.id);
        let ids: Vec<u8> = critics.iter().map(|c| c.id).collect();
        if ids != [1, 2, 3] {
            return Err(PipelineError::Config(format!("critic ids must be exactly 1, 2, 3 (found {ids:?})")));
        }
        let systems: BTreeSet<&str> = critics.iter().map(|c| c.system.trim()).collect();
        if systems.len() != CRITIC_COUNT || systems.contains("") {
            return Err(PipelineError::Config("critic personas need distinct, nonempty system prompts".into()));
        }
        Ok(Self { critics })
    }

    pub fn get(&self, id: u8) -> Option<&CriticPersona> {
        self.critics.get((id as usize).checked_sub(1)?)
    }

    pub fn critics(&self) -> &[CriticPersona] {
        &self.critics
    }
}
