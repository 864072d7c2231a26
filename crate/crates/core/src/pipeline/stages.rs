use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::config::{CriticPanel, PromptTemplate, TemplateSet, CRITIC_COUNT};
use super::types::{
    AnalysisContext, CandidateQuestion, CandidateSet, CriticScore, RefinementSuggestion, ScoreStatus,
};
use super::PipelineError;
use crate::kb::{
    select_relevant_biases, BiasTaxonomy, CounterArgument, CounterArgumentKind, ToulminAssessment, DEFAULT_BIAS_K,
};
use crate::llm::{ChatMessage, ChatRequest, Gateway, StructuredOutput};
use crate::nl2sql::{DbProfile, Sandbox};
use crate::util::{parallel_map, tokenize};

pub const MAX_CANDIDATE_QUESTIONS: usize = 8;
pub const MAX_SUGGESTIONS: usize = 5;
const CRITIC_SEED_SALT: u64 = 0xc817_1c5e;

/// `candidate-set` structured output.
#[derive(Debug, Clone, Deserialize)]
pub struct CandidateOutput {
    pub questions: Vec<CandidateQuestion>,
}

impl StructuredOutput for CandidateOutput {
    const SCHEMA: &'static str = "candidate-set";
    fn shape_hint() -> &'static str {
        "{\"questions\": [{\"text\": <question>, \"rationale\": <why it is better>, \"addressed_bias_ids\": [<bias id>, ...]}, ...]} with 1 to 8 questions"
    }
    fn check(&self) -> Result<(), String> {
        if self.questions.is_empty() || self.questions.len() > MAX_CANDIDATE_QUESTIONS {
            return Err(format!("expected 1-{MAX_CANDIDATE_QUESTIONS} questions, got {}", self.questions.len()));
        }
        if self.questions.iter().any(|q| q.text.trim().is_empty()) {
            return Err("question text is empty".into());
        }
        Ok(())
    }
}

/// `critic-score` structured output.
#[derive(Debug, Clone, Deserialize)]
pub struct CriticOutput {
    pub insight: u8,
    pub logic: u8,
    pub bias_mitigation: u8,
    pub feedback: String,
}

impl StructuredOutput for CriticOutput {
    const SCHEMA: &'static str = "critic-score";
    fn shape_hint() -> &'static str {
        "{\"insight\": <1-10>, \"logic\": <1-10>, \"bias_mitigation\": <1-10>, \"feedback\": <text>}"
    }
    fn check(&self) -> Result<(), String> {
        for (name, v) in [("insight", self.insight), ("logic", self.logic), ("bias_mitigation", self.bias_mitigation)] {
            if !(1..=10).contains(&v) {
                return Err(format!("{name} score {v} outside 1-10"));
            }
        }
        if self.feedback.trim().is_empty() {
            return Err("feedback is empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReflectionItem {
    pub question: String,
    #[serde(default)]
    pub rationale: String,
    #[serde(default)]
    pub addressed_bias_ids: Vec<String>,
    #[serde(default)]
    pub counter_arguments: Vec<CounterArgument>,
    pub toulmin: ToulminAssessment,
}

/// `reflection` structured output.
#[derive(Debug, Clone, Deserialize)]
pub struct ReflectionOutput {
    pub suggestions: Vec<ReflectionItem>,
}

impl StructuredOutput for ReflectionOutput {
    const SCHEMA: &'static str = "reflection";
    fn shape_hint() -> &'static str {
        "{\"suggestions\": [{\"question\": <text>, \"rationale\": <text>, \"addressed_bias_ids\": [<id>], \
         \"counter_arguments\": [{\"kind\": <conclusion-rebutter|premise-rebutter|argument-undercutter|framing-challenge|implementation-challenge>, \"text\": <challenge>}], \
         \"toulmin\": {\"claim\": {\"rating\": <1-5>, \"note\": <text>}, \"evidence\": {...}, \"warrant\": {...}, \"backing\": {...}, \"qualifier\": {...}, \"rebuttal\": {...}}}]} with at most 5 suggestions"
    }
    fn check(&self) -> Result<(), String> {
        if self.suggestions.is_empty() {
            return Err("no suggestions".into());
        }
        for s in &self.suggestions {
            if s.question.trim().is_empty() {
                return Err("suggestion question is empty".into());
            }
            s.toulmin.validate()?;
            for ca in &s.counter_arguments {
                ca.validate()?;
            }
        }
        Ok(())
    }
}

/// `schema-elements` structured output.
#[derive(Debug, Clone, Deserialize)]
pub struct SchemaElementsOutput {
    pub elements: Vec<String>,
}

impl StructuredOutput for SchemaElementsOutput {
    const SCHEMA: &'static str = "schema-elements";
    fn shape_hint() -> &'static str {
        "{\"elements\": [<table.column>, ...]}"
    }
}

fn column_ids_mentioned(question: &str, profile: &DbProfile) -> HashSet<String> {
    let q = question.to_lowercase();
    profile
        .column_ids()
        .into_iter()
        .filter(|id| q.contains(&id.to_lowercase()))
        .collect()
}

/// Columns named in the question, either as `table.column` or by a column
/// name whose underscore-separated parts all occur as question tokens.
pub fn heuristic_schema_elements(question: &str, profile: &DbProfile) -> Vec<String> {
    let literal = column_ids_mentioned(question, profile);
    let toks: HashSet<String> = tokenize(question).into_iter().collect();
    profile
        .column_ids()
        .into_iter()
        .filter(|id| {
            if literal.contains(id) {
                return true;
            }
            let col = id.split_once('.').map(|(_, c)| c).unwrap_or(id);
            let parts = tokenize(col);
            !parts.is_empty() && col.len() > 2 && parts.iter().all(|p| toks.contains(p))
        })
        .collect()
}

fn schema_request(question: &str, context: &str, profile: &DbProfile) -> ChatRequest {
    let user = format!(
        "Decision context: {context}\nQuestion: {question}\n\nColumns:\n{}\n\n\
         Which columns does an analysis of this question for this decision need? Reply with a single ```json block: {}",
        profile.distribution_lines().join("\n"),
        SchemaElementsOutput::shape_hint()
    );
    ChatRequest::new(
        "prepare:schema",
        vec![
            ChatMessage::system("You map analytical questions to the database columns they depend on."),
            ChatMessage::user(user),
        ],
    )
}

/// Data preparation: profile, relevant biases and relevant schema elements.
pub fn prepare(
    question: &str,
    decision_context: &str,
    database_id: &str,
    sandbox: &Sandbox,
    taxonomy: &BiasTaxonomy,
    gw: &Gateway,
) -> Result<AnalysisContext, PipelineError> {
    if question.trim().is_empty() {
        return Err(PipelineError::Validation("question is empty".into()));
    }
    if decision_context.trim().is_empty() {
        return Err(PipelineError::Validation("decision context is empty".into()));
    }
    if !sandbox.registry().contains(database_id) {
        return Err(PipelineError::NotFound(format!("database '{database_id}'")));
    }
    let profile = sandbox
        .introspect(database_id)
        .map_err(|e| PipelineError::stage("prepare", e))?;
    let profile = (*profile).clone();

    let relevant_biases =
        select_relevant_biases(question, decision_context, &profile, taxonomy, Some(gw), DEFAULT_BIAS_K)
            .map_err(|e| PipelineError::Validation(e.to_string()))?;

    let schema_elements = match gw.complete_structured::<SchemaElementsOutput>(schema_request(
        question,
        decision_context,
        &profile,
    )) {
        Ok((out, _)) => {
            let mut keep: HashSet<String> = column_ids_mentioned(question, &profile);
            let ids = profile.column_ids();
            for e in out.elements {
                let e = e.trim().to_lowercase();
                if let Some(id) = ids.iter().find(|id| id.to_lowercase() == e) {
                    keep.insert(id.clone());
                }
            }
            ids.into_iter().filter(|id| keep.contains(id)).collect()
        }
        Err(e) => {
            tracing::info!("schema element selection failed ({e}); using name overlap");
            heuristic_schema_elements(question, &profile)
        }
    };

    Ok(AnalysisContext {
        question: question.trim().to_string(),
        decision_context: decision_context.trim().to_string(),
        database_id: database_id.to_string(),
        profile,
        relevant_biases,
        schema_elements,
    })
}

fn toulmin_probe() -> String {
    [
        "claim: does the query capture the assertion in the question and fit the decision context?",
        "evidence: is enough reliable data retrieved, and from trustworthy sources?",
        "warrant: is the step from question to SQL logically sound and within constraints?",
        "backing: is the logic supported by standard practice and definitions?",
        "qualifier: does it state its confidence, scope and rounding limits?",
        "rebuttal: which alternative queries, interpretations or exceptions could overturn it?",
    ]
    .join("\n")
}

fn counterarg_probe() -> String {
    CounterArgumentKind::ALL
        .iter()
        .map(|k| format!("{k}: {}", k.probe()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn bias_lines(ctx: &AnalysisContext) -> String {
    if ctx.relevant_biases.is_empty() {
        return "none identified".into();
    }
    ctx.relevant_biases
        .iter()
        .map(|b| format!("- {} [{}] ({}): {}", b.name, b.id, b.category, b.description))
        .collect::<Vec<_>>()
        .join("\n")
}

fn schema_text(ctx: &AnalysisContext) -> String {
    let lines = ctx.profile.distribution_lines();
    let focus: Vec<&String> = if ctx.schema_elements.is_empty() {
        lines.iter().collect()
    } else {
        lines
            .iter()
            .filter(|l| ctx.schema_elements.iter().any(|e| l.starts_with(&format!("{e}:"))))
            .collect()
    };
    let focus: Vec<&str> = focus.iter().map(|s| s.as_str()).collect();
    format!("{}\n\nKey columns:\n{}", ctx.profile.ddl_summary(), focus.join("\n"))
}

pub(crate) fn render_candidate_request(t: &PromptTemplate, ctx: &AnalysisContext, seed: u64) -> ChatRequest {
    let values: BTreeMap<&str, String> = [
        ("question", ctx.question.clone()),
        ("context", ctx.decision_context.clone()),
        ("schema", schema_text(ctx)),
        ("biases", bias_lines(ctx)),
        ("toulmin", toulmin_probe()),
        ("counterargs", counterarg_probe()),
    ]
    .into_iter()
    .collect();
    let user = format!(
        "{}\n\nReply with a single ```json block: {}. Cite bias ids exactly as listed.",
        t.render(&values),
        CandidateOutput::shape_hint()
    );
    ChatRequest::new(
        format!("stage1:template-{:02}", t.id),
        vec![ChatMessage::system(t.system_text.trim()), ChatMessage::user(user)],
    )
    .with_seed(seed)
}

fn keep_known_ids(ids: &[String], taxonomy: &BiasTaxonomy) -> Vec<String> {
    let mut seen = HashSet::new();
    ids.iter()
        .map(|s| s.trim().to_string())
        .filter(|s| taxonomy.contains(s) && seen.insert(s.clone()))
        .collect()
}

/// Stage 1: one call per template. Unusable output yields an empty,
/// flagged set instead of aborting.
pub fn generate_candidates(
    ctx: &AnalysisContext,
    templates: &TemplateSet,
    taxonomy: &BiasTaxonomy,
    gw: &Gateway,
    seed: u64,
    on_done: &(dyn Fn(&CandidateSet, usize) + Sync),
) -> Result<Vec<CandidateSet>, PipelineError> {
    let completed = AtomicUsize::new(0);
    let workers = gw.config().parallelism;
    let sets = parallel_map(templates.templates(), workers, |_, t| {
        let req = render_candidate_request(t, ctx, seed);
        let set = match gw.complete(req.clone()) {
            Ok(resp) => match gw.extract_structured::<CandidateOutput>(&req, &resp) {
                Ok(out) => CandidateSet {
                    template_id: t.id,
                    questions: out
                        .questions
                        .into_iter()
                        .map(|q| CandidateQuestion {
                            text: q.text.trim().to_string(),
                            rationale: q.rationale.trim().to_string(),
                            addressed_bias_ids: keep_known_ids(&q.addressed_bias_ids, taxonomy),
                        })
                        .collect(),
                    failed: false,
                    failure: None,
                    raw: resp.content,
                },
                Err(e) => failed_set(t.id, e.to_string(), resp.content),
            },
            Err(e) => failed_set(t.id, e.to_string(), String::new()),
        };
        on_done(&set, completed.fetch_add(1, Ordering::SeqCst) + 1);
        set
    });
    if sets.iter().all(|s| s.failed) {
        return Err(PipelineError::stage("generate", "no viable candidates"));
    }
    Ok(sets)
}

fn failed_set(template_id: u8, reason: String, raw: String) -> CandidateSet {
    CandidateSet {
        template_id,
        questions: Vec::new(),
        failed: true,
        failure: Some(reason),
        raw,
    }
}

/// For each of `n` candidates, the two critics (ascending) that review it:
/// one of the three is excluded uniformly at random.
pub fn assign_critics(n: usize, seed: u64) -> Vec<[u8; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ CRITIC_SEED_SALT);
    (0..n)
        .map(|_| {
            let excluded = rng.gen_range(1..=CRITIC_COUNT as u8);
            let mut pair = (1..=CRITIC_COUNT as u8).filter(|c| *c != excluded);
            [pair.next().expect("two critics"), pair.next().expect("two critics")]
        })
        .collect()
}

fn critic_request(ctx: &AnalysisContext, set: &CandidateSet, panel: &CriticPanel, critic_id: u8, seed: u64) -> ChatRequest {
    let persona = panel.get(critic_id).expect("critic id in 1..=3");
    let questions: Vec<String> = set
        .questions
        .iter()
        .enumerate()
        .map(|(i, q)| {
            format!(
                "{}. {}\n   rationale: {}\n   addresses: {}",
                i + 1,
                q.text,
                q.rationale,
                q.addressed_bias_ids.join(", ")
            )
        })
        .collect();
    let user = format!(
        "Decision context: {}\nOriginal question: {}\n\nBiases at risk:\n{}\n\nCandidate refined questions:\n{}\n\n\
         Score the candidate set from 1 (poor) to 10 (excellent) on insight, logic and bias mitigation, and give \
         concrete feedback for improving it. Reply with a single ```json block: {}",
        ctx.decision_context,
        ctx.question,
        bias_lines(ctx),
        questions.join("\n"),
        CriticOutput::shape_hint()
    );
    ChatRequest::new(
        format!("stage2:critic-{critic_id}:template-{:02}", set.template_id),
        vec![ChatMessage::system(persona.system.trim()), ChatMessage::user(user)],
    )
    .with_seed(seed)
}

/// Stage 2: two critics per candidate. Empty candidates are scored
/// (1,1,1) without calls; unusable critic replies are recorded as missing.
pub fn critique(
    ctx: &AnalysisContext,
    candidates: &[CandidateSet],
    panel: &CriticPanel,
    gw: &Gateway,
    seed: u64,
    on_done: &(dyn Fn(&CriticScore, usize, usize) + Sync),
) -> (Vec<[u8; 2]>, Vec<CriticScore>) {
    let assignment = assign_critics(candidates.len(), seed);
    let jobs: Vec<(&CandidateSet, u8)> = candidates
        .iter()
        .zip(&assignment)
        .flat_map(|(c, pair)| pair.iter().map(move |id| (c, *id)))
        .collect();
    let total = jobs.len();
    let completed = AtomicUsize::new(0);
    let scores = parallel_map(&jobs, gw.config().parallelism, |_, (set, critic_id)| {
        let score = if set.failed || set.questions.is_empty() {
            CriticScore::floor(*critic_id, set.template_id, ScoreStatus::Automatic, "no output".into())
        } else {
            match gw.complete_structured::<CriticOutput>(critic_request(ctx, set, panel, *critic_id, seed)) {
                Ok((out, _)) => CriticScore {
                    critic_id: *critic_id,
                    candidate_template_id: set.template_id,
                    insight: out.insight,
                    logic: out.logic,
                    bias_mitigation: out.bias_mitigation,
                    feedback: out.feedback.trim().to_string(),
                    status: ScoreStatus::Scored,
                },
                Err(e) => CriticScore::floor(
                    *critic_id,
                    set.template_id,
                    ScoreStatus::Missing,
                    format!("missing: {e}"),
                ),
            }
        };
        on_done(&score, completed.fetch_add(1, Ordering::SeqCst) + 1, total);
        score
    });
    (assignment, scores)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Winner among `(template_id, per-critic [insight, logic, bias])` rows:
/// highest mean of the critics' dimension means, then higher bias
/// mitigation mean, then lower template id. Rows with no critic scores
/// count as (1,1,1).
pub fn pick_winner(rows: &[(u8, Vec<[f64; 3]>)]) -> Option<u8> {
    let summary: Vec<(u8, f64, f64)> = rows
        .iter()
        .map(|(id, critics)| {
            if critics.is_empty() {
                return (*id, 1.0, 1.0);
            }
            let n = critics.len() as f64;
            let total = critics.iter().map(|c| (c[0] + c[1] + c[2]) / 3.0).sum::<f64>() / n;
            let bias = critics.iter().map(|c| c[2]).sum::<f64>() / n;
            (*id, total, bias)
        })
        .collect();
    let mut best: Option<(u8, f64, f64)> = None;
    for cand in summary {
        best = Some(match best {
            None => cand,
            Some(b) => {
                let better = if !close(cand.1, b.1) {
                    cand.1 > b.1
                } else if !close(cand.2, b.2) {
                    cand.2 > b.2
                } else {
                    cand.0 < b.0
                };
                if better {
                    cand
                } else {
                    b
                }
            }
        });
    }
    best.map(|b| b.0)
}

/// Winning template among viable candidates. Missing critic scores are
/// ignored.
pub fn select_winner(candidates: &[CandidateSet], scores: &[CriticScore]) -> Option<u8> {
    let rows: Vec<(u8, Vec<[f64; 3]>)> = candidates
        .iter()
        .filter(|c| !c.failed && !c.questions.is_empty())
        .map(|c| {
            let critics = scores
                .iter()
                .filter(|s| s.candidate_template_id == c.template_id && s.status == ScoreStatus::Scored)
                .map(|s| [s.insight as f64, s.logic as f64, s.bias_mitigation as f64])
                .collect();
            (c.template_id, critics)
        })
        .collect();
    pick_winner(&rows)
}

fn reflection_request(ctx: &AnalysisContext, winner: &CandidateSet, feedback: &[String], seed: u64) -> ChatRequest {
    let questions: Vec<String> = winner
        .questions
        .iter()
        .enumerate()
        .map(|(i, q)| format!("{}. {} (rationale: {})", i + 1, q.text, q.rationale))
        .collect();
    let user = format!(
        "Decision context: {}\nOriginal question: {}\n\nBiases at risk:\n{}\n\nBest candidate questions:\n{}\n\n\
         Critic feedback:\n{}\n\n\
         Reflect once on the feedback and produce the final refined questions (at most {MAX_SUGGESTIONS}, \
         distinct, each answerable from the database). For each, rate the implied argument on every Toulmin \
         component from 1 to 5:\n{}\n\nand add the counter-arguments that apply:\n{}\n\n\
         Reply with a single ```json block: {}",
        ctx.decision_context,
        ctx.question,
        bias_lines(ctx),
        questions.join("\n"),
        feedback.iter().map(|f| format!("- {f}")).collect::<Vec<_>>().join("\n"),
        toulmin_probe(),
        counterarg_probe(),
        ReflectionOutput::shape_hint()
    );
    ChatRequest::new(
        "stage3:reflection",
        vec![
            ChatMessage::system(
                "You refine analytical questions using critic feedback so they resist cognitive biases and \
                 support the decision at hand.",
            ),
            ChatMessage::user(user),
        ],
    )
    .with_seed(seed)
}

fn dedup_key(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Stage 3: a single reflection call. Returns the suggestions and whether
/// they came from the fallback (the winner's own questions).
pub fn reflect(
    ctx: &AnalysisContext,
    winner: &CandidateSet,
    feedback: &[String],
    taxonomy: &BiasTaxonomy,
    gw: &Gateway,
    seed: u64,
) -> (Vec<RefinementSuggestion>, bool) {
    let parsed = gw.complete_structured::<ReflectionOutput>(reflection_request(ctx, winner, feedback, seed));
    let mut seen = HashSet::new();
    if let Ok((out, _)) = parsed {
        let suggestions: Vec<RefinementSuggestion> = out
            .suggestions
            .into_iter()
            .filter(|s| seen.insert(dedup_key(&s.question)))
            .take(MAX_SUGGESTIONS)
            .map(|s| RefinementSuggestion {
                question_text: s.question.trim().to_string(),
                rationale: s.rationale.trim().to_string(),
                addressed_bias_ids: keep_known_ids(&s.addressed_bias_ids, taxonomy),
                counter_arguments: s.counter_arguments,
                toulmin: Some(s.toulmin),
            })
            .collect();
        return (suggestions, false);
    }
    let fallback = winner
        .questions
        .iter()
        .filter(|q| seen.insert(dedup_key(&q.text)))
        .take(MAX_SUGGESTIONS)
        .map(|q| RefinementSuggestion {
            question_text: q.text.clone(),
            rationale: q.rationale.clone(),
            addressed_bias_ids: q.addressed_bias_ids.clone(),
            counter_arguments: Vec::new(),
            toulmin: None,
        })
        .collect();
    (fallback, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(id: u8, n: usize) -> CandidateSet {
        CandidateSet {
            template_id: id,
            questions: (0..n)
                .map(|i| CandidateQuestion {
                    text: format!("q{i}"),
                    rationale: String::new(),
                    addressed_bias_ids: vec![],
                })
                .collect(),
            failed: n == 0,
            failure: None,
            raw: String::new(),
        }
    }

    fn score(critic: u8, cand: u8, i: u8, l: u8, b: u8) -> CriticScore {
        CriticScore {
            critic_id: critic,
            candidate_template_id: cand,
            insight: i,
            logic: l,
            bias_mitigation: b,
            feedback: "f".into(),
            status: ScoreStatus::Scored,
        }
    }

    #[test]
    fn higher_mean_wins() {
        let c = vec![set(1, 1), set(2, 1)];
        let s = vec![score(1, 1, 8, 8, 8), score(2, 1, 8, 8, 8), score(1, 2, 7, 9, 7), score(3, 2, 7, 9, 7)];
        assert_eq!(select_winner(&c, &s), Some(1));
    }

    #[test]
    fn bias_mitigation_breaks_ties() {
        let c = vec![set(1, 1), set(2, 1)];
        let s = vec![score(1, 1, 8, 7, 8), score(2, 1, 8, 7, 8), score(1, 2, 7, 7, 9), score(3, 2, 7, 7, 9)];
        assert_eq!(select_winner(&c, &s), Some(2));
    }

    #[test]
    fn full_tie_prefers_lower_id() {
        let c = vec![set(3, 1), set(2, 1)];
        let s = vec![score(1, 3, 5, 5, 5), score(1, 2, 5, 5, 5)];
        assert_eq!(select_winner(&c, &s), Some(2));
    }

    #[test]
    fn failed_candidates_cannot_win() {
        let c = vec![set(1, 0), set(2, 1)];
        let s = vec![score(1, 2, 1, 1, 1)];
        assert_eq!(select_winner(&c, &s), Some(2));
        assert_eq!(select_winner(&[set(1, 0)], &[]), None);
    }

    #[test]
    fn assignment_is_seeded_and_valid() {
        let a = assign_critics(12, 7);
        assert_eq!(a, assign_critics(12, 7));
        assert_ne!(a, assign_critics(12, 8));
        assert!(a.iter().all(|p| p[0] < p[1] && p[1] <= 3 && p[0] >= 1));
    }

    #[test]
    fn heuristic_elements_use_literal_and_name_overlap() {
        let profile: DbProfile = serde_json::from_value(serde_json::json!({
            "database_id": "f",
            "tables": [{"name": "account", "row_count": 1, "sampled": false, "columns": [
                {"name": "date", "declared_type": "DATE", "type_class": "temporal", "null_rate": 0.0, "distinct_count": 1, "top_values": []},
                {"name": "frequency", "declared_type": "TEXT", "type_class": "categorical", "null_rate": 0.0, "distinct_count": 1, "top_values": []}
            ]}, {"name": "loan", "row_count": 1, "sampled": false, "columns": [
                {"name": "amount", "declared_type": "INTEGER", "type_class": "numerical", "null_rate": 0.0, "distinct_count": 1, "top_values": []}
            ]}]
        }))
        .unwrap();
        assert_eq!(heuristic_schema_elements("Group by account.date please", &profile), vec!["account.date"]);
        assert_eq!(heuristic_schema_elements("total loan amount", &profile), vec!["loan.amount"]);
    }
}
