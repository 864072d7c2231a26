//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

#[path = "../../hv/tests/oracle/mod.rs"]
mod hv_oracle;
#[path = "../../core/tests/support/sql_corpus.rs"]
mod sql_corpus;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::process::ExitCode;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use askwell_core::eval::{
    builtin_scenarios, compute_stats, cosine_table, gwet_ac1, paired_t, run_eval, tfidf_match, Dimension, EvalConfig,
    EvalDeps, RatingMatrix, SystemName,
};
use askwell_core::kb::{BiasCategory, BiasTaxonomy};
use askwell_core::llm::{
    BackendError, BackendKind, ChatBackend, ChatRequest, ChatResponse, Gateway, GatewayConfig, MockBackend,
};
use askwell_core::nl2sql::{
    build_fixture_dbs, validate_sql, DatabaseRegistry, Nl2SqlError, Sandbox, SandboxConfig, ViolationKind, FIXTURE_SEED,
};
use askwell_core::pipeline::{assign_critics, Pipeline, PipelineEvent, RunInput, RunStatus};
use askwell_hv::validate::{
    append_noise_variable, instance_shape, DATA_PROCESSING, MI_BOUNDS, MI_MONOTONE, NORMALIZATION,
};
use askwell_hv::{
    best_subset_exhaustive, best_subset_greedy, compute_joint, generate_synthetic_net, hv_score, run_property_suite,
    SuiteConfig,
};
use askwell_server::{build_router, AppState, ServerConfig, Store};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use sql_corpus::{corpus, Expect, WRITE_HEADS};
use tower::ServiceExt;

const LOANS_Q: &str = "Which clients have the largest loans?";
const LOANS_CTX: &str = "Identify loan accounts that are at risk of default so collections can intervene early.";

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sandbox(dir: &Path, config: SandboxConfig) -> Arc<Sandbox> {
    build_fixture_dbs(dir, FIXTURE_SEED).expect("fixture databases");
    let mut reg = DatabaseRegistry::new();
    reg.add_dir(dir).expect("registry");
    Arc::new(Sandbox::new(reg, config))
}

fn hv_property_suite() -> Outcome {
    let started = Instant::now();
    let report = run_property_suite(&SuiteConfig::default()).map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    let mut detail = Vec::new();
    for name in [MI_BOUNDS, MI_MONOTONE, DATA_PROCESSING, NORMALIZATION] {
        let p = report.property(name).ok_or(format!("{name} missing"))?;
        ensure(p.passed(), || format!("{name}: {} of {} instances violated", p.failures, p.instances))?;
        detail.push(format!("{name} max dev {:.1e}", p.max_deviation));
    }
    let nets = report.property(NORMALIZATION).map(|p| p.instances).unwrap_or(0);
    ensure(nets >= 1000, || format!("only {nets} networks"))?;
    ensure(report.config.max_variables <= 12, || "networks exceed 12 variables".into())?;
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{nets} networks, {}; {secs:.1}s", detail.join(", ")))
}

fn explanatory_density() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut violations = 0;
    let mut positive = 0;
    let mut max_dev: f64 = 0.0;
    for i in 0..200 {
        let (kind, size) = instance_shape(i, 2, 10);
        let net = generate_synthetic_net(kind, size, 9_000 + i as u64).map_err(|e| e.to_string())?;
        let joint = compute_joint(&net).map_err(|e| e.to_string())?;
        let subset = net.candidate_names();
        let base = hv_score(&joint, net.target(), &subset).map_err(|e| e.to_string())?;
        let noisy = append_noise_variable(&net, &mut rng).map_err(|e| e.to_string())?;
        let noisy_joint = compute_joint(&noisy).map_err(|e| e.to_string())?;
        let mut extended = subset.clone();
        extended.push(noisy.variables().last().expect("appended").name.clone());
        let after = hv_score(&noisy_joint, noisy.target(), &extended).map_err(|e| e.to_string())?;
        let mi_ref = hv_oracle::brute_mi(&noisy_joint, noisy.target(), &extended);
        let dev = (after.mi - base.mi).abs().max((after.mi - mi_ref).abs());
        max_dev = max_dev.max(dev);
        if base.hv > 0.0 {
            positive += 1;
        }
        if dev > 1e-9 || (base.hv > 0.0 && after.hv >= base.hv) {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} violations of 200"))?;
    Ok(format!("200 instances ({positive} with HV>0), 0 violations, max MI dev {max_dev:.1e}"))
}

fn subset_search_oracle() -> Outcome {
    let mut greedy_worse = 0;
    for i in 0..100 {
        let (kind, size) = instance_shape(i, 2, 7);
        let net = generate_synthetic_net(kind, size, 40_000 + i as u64).map_err(|e| e.to_string())?;
        ensure(net.candidate_names().len() <= 6, || "more than 6 candidates".into())?;
        let joint = compute_joint(&net).map_err(|e| e.to_string())?;
        let max = net.candidate_names().len();
        let ex = best_subset_exhaustive(&net, max).map_err(|e| e.to_string())?;
        let (subset, _mi, hv) = hv_oracle::brute_best(&net, &joint, max);
        ensure(ex.subset == subset && (ex.hv - hv).abs() <= 1e-9, || {
            format!("instance {i}: {:?}/{} vs brute force {:?}/{}", ex.subset, ex.hv, subset, hv)
        })?;
        let gr = best_subset_greedy(&net, max).map_err(|e| e.to_string())?;
        ensure(gr.hv <= ex.hv + 1e-9, || format!("instance {i}: greedy {} beats exhaustive {}", gr.hv, ex.hv))?;
        if gr.hv < ex.hv - 1e-12 {
            greedy_worse += 1;
        }
    }
    Ok(format!("100 nets agree with brute force; greedy strictly worse on {greedy_worse}"))
}

fn taxonomy_gate() -> Outcome {
    let t = BiasTaxonomy::builtin();
    let counts = t.category_counts();
    let got: Vec<usize> = BiasCategory::ALL.iter().map(|c| counts.get(c).copied().unwrap_or(0)).collect();
    ensure(t.len() == 53, || format!("{} entries", t.len()))?;
    ensure(got == [8, 9, 8, 12, 16], || format!("category counts {got:?}"))?;
    let ids: HashSet<&str> = t.entries().iter().map(|e| e.id.as_str()).collect();
    ensure(ids.len() == 53, || "duplicate ids".into())?;
    Ok("53 entries, 8/9/8/12/16".into())
}

fn pipeline_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sb = sandbox(dir.path(), SandboxConfig::default());
    let input = RunInput {
        question: LOANS_Q.into(),
        decision_context: LOANS_CTX.into(),
        database_id: "financial".into(),
        seed: 20250101,
    };
    let mut runs = Vec::new();
    let mut secs = 0.0f64;
    for _ in 0..2 {
        let gw = Gateway::mock_builtin(GatewayConfig::default());
        let events = Mutex::new(0usize);
        let sink = |_: PipelineEvent| *events.lock().unwrap() += 1;
        let started = Instant::now();
        let run = Pipeline::new(gw.clone(), sb.clone()).run(&input, &sink, None);
        secs = secs.max(started.elapsed().as_secs_f64());
        let count = |p: &str| gw.calls().iter().filter(|c| c.tag.starts_with(p)).count();
        ensure(run.status == RunStatus::Completed, || format!("run failed: {:?}", run.failure))?;
        let calls = (count("stage1:"), count("stage2:"), count("stage3:"));
        ensure(calls == (12, 24, 1), || format!("calls {calls:?}"))?;
        ensure(!run.suggestions.is_empty() && run.suggestions.len() <= 5, || {
            format!("{} suggestions", run.suggestions.len())
        })?;
        runs.push(run);
    }
    let (a, b) = (runs[0].canonical_json(), runs[1].canonical_json());
    ensure(a == b, || "runs differ under the same seed".into())?;
    ensure(secs < 10.0, || format!("run took {secs:.2}s"))?;
    Ok(format!(
        "12+24+1 calls, {} suggestions, identical canonical runs ({} bytes), {secs:.2}s",
        runs[0].suggestions.len(),
        a.len()
    ))
}

fn critic_uniformity() -> Outcome {
    let draws = assign_critics(3000, 20250101);
    let mut counts: BTreeMap<[u8; 2], usize> = BTreeMap::new();
    for mut pair in draws.iter().copied() {
        pair.sort();
        *counts.entry(pair).or_default() += 1;
    }
    ensure(counts.len() == 3, || format!("pairs seen: {:?}", counts.keys().collect::<Vec<_>>()))?;
    let freqs: Vec<f64> = counts.values().map(|c| *c as f64 / draws.len() as f64).collect();
    let dev = freqs.iter().map(|f| (f - 1.0 / 3.0).abs()).fold(0.0, f64::max);
    ensure(dev <= 0.05, || format!("frequencies {freqs:?}"))?;
    Ok(format!(
        "3000 draws, frequencies {}, max |dev| {dev:.4}",
        freqs.iter().map(|f| format!("{f:.4}")).collect::<Vec<_>>().join("/")
    ))
}

fn sql_sandbox() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sb = sandbox(
        dir.path(),
        SandboxConfig {
            deadline_ms: 2000,
            ..SandboxConfig::default()
        },
    );
    let files: Vec<_> = ["financial.sqlite", "schools.sqlite"].iter().map(|f| dir.path().join(f)).collect();
    let digest = |p: &Path| Sha256::digest(std::fs::read(p).expect("db file")).to_vec();
    let before: Vec<_> = files.iter().map(|p| digest(p)).collect();
    let items = corpus(20250101, 600);
    ensure(items.len() >= 500, || format!("corpus has {} items", items.len()))?;
    let mut write_rejected = 0;
    for (sql, expect) in &items {
        let verdict = validate_sql(sql);
        match expect {
            Expect::Accept => ensure(verdict.is_ok(), || format!("rejected {sql:?}: {verdict:?}"))?,
            Expect::RejectWrite => {
                ensure(matches!(&verdict, Err(v) if v.kind == ViolationKind::WriteStatement), || {
                    format!("write head not rejected: {sql:?}")
                })?;
                write_rejected += 1;
            }
            Expect::RejectMulti => ensure(verdict.is_err(), || format!("accepted {sql:?}"))?,
            Expect::Any => {}
        }
        for db in ["financial", "schools"] {
            let _ = sb.execute(db, sql);
            let _ = sb.execute_raw(db, sql);
        }
    }
    let after: Vec<_> = files.iter().map(|p| digest(p)).collect();
    ensure(before == after, || "a database file changed".into())?;
    for head in WRITE_HEADS {
        let sql = format!("{head} something");
        ensure(validate_sql(&sql).is_err(), || format!("accepted {sql:?}"))?;
    }
    let capped = sb
        .execute(
            "financial",
            "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c WHERE x < 5000) SELECT x FROM c",
        )
        .map_err(|e| e.to_string())?;
    ensure(capped.rows.len() == 1000 && capped.truncated && capped.total_row_count == 5000, || {
        format!("row cap: {} rows, truncated={}", capped.rows.len(), capped.truncated)
    })?;
    let quick_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let quick = sandbox(
        quick_dir.path(),
        SandboxConfig {
            deadline_ms: 200,
            ..SandboxConfig::default()
        },
    );
    let started = Instant::now();
    let r = quick.execute(
        "financial",
        "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT COUNT(*) FROM c",
    );
    let waited = started.elapsed().as_secs_f64();
    ensure(matches!(r, Err(Nl2SqlError::Timeout { .. })) && waited < 5.0, || {
        format!("deadline not enforced: {r:?} after {waited:.2}s")
    })?;
    Ok(format!(
        "{} statements, {write_rejected} write heads rejected, 0 file mutations, cap 1000/5000, timeout after {waited:.2}s",
        items.len()
    ))
}

struct FailingStage1(MockBackend);

impl ChatBackend for FailingStage1 {
    fn send(&self, req: &ChatRequest) -> Result<ChatResponse, BackendError> {
        if req.tag.starts_with("stage1:") {
            return Err(BackendError::Request {
                status: 400,
                message: "rejected".into(),
            });
        }
        self.0.send(req)
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }
}

struct SseEvent {
    event: String,
    id: u64,
}

fn parse_sse(text: &str) -> Vec<SseEvent> {
    text.split("\n\n")
        .filter(|b| !b.trim().is_empty())
        .map(|block| {
            let mut e = SseEvent {
                event: String::new(),
                id: 0,
            };
            for line in block.lines() {
                if let Some(v) = line.strip_prefix("event: ") {
                    e.event = v.into();
                } else if let Some(v) = line.strip_prefix("id: ") {
                    e.id = v.parse().unwrap_or(0);
                }
            }
            e
        })
        .collect()
}

async fn call(router: &axum::Router, method: &str, uri: &str, body: Option<Value>, last: Option<u64>) -> (StatusCode, String) {
    let mut req = Request::builder()
        .method(method)
        .uri(uri)
        .header("authorization", "Bearer acceptance-token");
    if let Some(l) = last {
        req = req.header("last-event-id", l.to_string());
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .expect("request");
    let fut = async {
        let resp = router.clone().oneshot(req).await.expect("infallible");
        let status = resp.status();
        let bytes = resp.into_body().collect().await.expect("body").to_bytes();
        (status, String::from_utf8_lossy(&bytes).into_owned())
    };
    tokio::time::timeout(Duration::from_secs(30), fut)
        .await
        .unwrap_or((StatusCode::GATEWAY_TIMEOUT, String::new()))
}

async fn job_events(router: &axum::Router) -> Result<(String, Vec<SseEvent>, f64), String> {
    let (st, body) = call(router, "POST", "/api/session", Some(json!({ "databaseId": "financial" })), None).await;
    ensure(st == StatusCode::CREATED, || format!("session: {st} {body}"))?;
    let session: Value = serde_json::from_str(&body).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let (st, body) = call(
        router,
        "POST",
        "/api/question",
        Some(json!({ "sessionId": session["sessionId"], "question": LOANS_Q, "decisionContext": LOANS_CTX })),
        None,
    )
    .await;
    ensure(st == StatusCode::ACCEPTED, || format!("question: {st} {body}"))?;
    let job = serde_json::from_str::<Value>(&body).map_err(|e| e.to_string())?["jobId"]
        .as_str()
        .unwrap_or_default()
        .to_string();
    let (st, body) = call(router, "GET", &format!("/api/stream/{job}"), None, None).await;
    ensure(st == StatusCode::OK, || format!("stream: {st}"))?;
    Ok((job, parse_sse(&body), started.elapsed().as_secs_f64()))
}

fn router_with(dir: &Path, backend: impl ChatBackend + 'static) -> axum::Router {
    let sb = sandbox(dir, SandboxConfig::default());
    let gw = Gateway::new(backend, GatewayConfig::default());
    let tokens: HashSet<String> = ["acceptance-token".to_string()].into();
    let state = AppState::new(
        Store::in_memory().expect("store"),
        Pipeline::new(gw, sb),
        tokens,
        &ServerConfig::default(),
    );
    build_router(state)
}

async fn sse_contract_async() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let router = router_with(dir.path(), MockBackend::builtin());
    let (job, events, secs) = job_events(&router).await?;
    let ids: Vec<u64> = events.iter().map(|e| e.id).collect();
    ensure(ids == (1..=ids.len() as u64).collect::<Vec<_>>(), || format!("ids {ids:?}"))?;
    let kinds: Vec<&str> = events.iter().map(|e| e.event.as_str()).collect();
    let rank = |k: &str| match k {
        "stage" | "progress" => Some(0),
        "insight" => Some(1),
        "result" => Some(2),
        "suggestions" => Some(3),
        "done" | "error" => Some(4),
        _ => None,
    };
    let ranks: Vec<Option<u8>> = kinds.iter().map(|k| rank(k)).collect();
    ensure(ranks.iter().all(Option::is_some) && ranks.windows(2).all(|w| w[0] <= w[1]), || {
        format!("order {kinds:?}")
    })?;
    for k in ["stage", "progress", "insight", "result", "suggestions"] {
        ensure(kinds.contains(&k), || format!("no {k} event"))?;
    }
    ensure(kinds.last() == Some(&"done"), || format!("terminal {:?}", kinds.last()))?;
    ensure(secs < 10.0, || format!("job took {secs:.2}s"))?;

    for cut in [1, events.len() / 3, events.len() - 1, events.len()] {
        let (_, body) = call(&router, "GET", &format!("/api/stream/{job}"), None, Some(cut as u64)).await;
        let replay: Vec<u64> = parse_sse(&body).iter().map(|e| e.id).collect();
        ensure(replay == ids[cut..].to_vec(), || format!("replay after {cut}: {replay:?}"))?;
    }

    let dir2 = tempfile::tempdir().map_err(|e| e.to_string())?;
    let failing = router_with(dir2.path(), FailingStage1(MockBackend::builtin()));
    let (_, failed, _) = job_events(&failing).await?;
    let last = failed.last().map(|e| e.event.as_str());
    ensure(last == Some("error"), || format!("failing run ended with {last:?}"))?;
    ensure(failed.iter().filter(|e| e.event == "done" || e.event == "error").count() == 1, || {
        "more than one terminal event".into()
    })?;
    Ok(format!(
        "{} events in order, ids 1..{}, replay suffixes exact, done in {secs:.2}s; failing run ends with error",
        events.len(),
        events.len()
    ))
}

fn sse_contract() -> Outcome {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?
        .block_on(sse_contract_async())
}

fn binary_matrix(a: &[&str], b: &[&str]) -> RatingMatrix {
    RatingMatrix::complete(
        (0..a.len()).map(|i| format!("item{i}")).collect(),
        vec!["r1".into(), "r2".into()],
        a.iter().zip(b).map(|(x, y)| vec![x.to_string(), y.to_string()]).collect(),
    )
}

fn statistics_oracle() -> Outcome {
    let mut problems = Vec::new();

    let perfect = binary_matrix(&["a", "b", "a", "b"], &["a", "b", "a", "b"]);
    let ac1_perfect = gwet_ac1(&perfect).map_err(|e| e.to_string())?;
    if (ac1_perfect - 1.0).abs() > 1e-9 {
        problems.push(format!("perfect agreement gave {ac1_perfect}"));
    }

    // 10 binary items, 8 agreements, each rater uses each category 5 times
    let r1 = ["a", "a", "a", "a", "a", "b", "b", "b", "b", "b"];
    let r2 = ["b", "a", "a", "a", "a", "a", "b", "b", "b", "b"];
    let eight = binary_matrix(&r1, &r2);
    let ac1_eight = gwet_ac1(&eight).map_err(|e| e.to_string())?;
    let opposite = binary_matrix(&["a", "b", "a", "b"], &["b", "a", "b", "a"]);
    let ac1_opposite = gwet_ac1(&opposite).map_err(|e| e.to_string())?;
    let stated_eight = 0.55 / 0.75;
    let stated_opposite = -1.0 / 3.0;
    if (ac1_eight - stated_eight).abs() > 1e-9 || (ac1_opposite - stated_opposite).abs() > 1e-9 {
        let three = |m: RatingMatrix| gwet_ac1(&m.with_categories(vec!["a".into(), "b".into(), "c".into()]));
        let q3 = (three(eight.clone()), three(opposite.clone()));
        problems.push(format!(
            "AC1 expected {stated_eight:.6} and {stated_opposite:.6} (which assume Pe=0.25) but the chance-agreement \
             formula Pe=sum pi(1-pi)/(Q-1) with Q=2 balanced categories gives Pe=0.5, so AC1={ac1_eight:.6} and \
             {ac1_opposite:.6}; the expected values only arise with Q=3 declared categories ({:.6}, {:.6})",
            q3.0.unwrap_or(f64::NAN),
            q3.1.unwrap_or(f64::NAN)
        ));
    }

    // reference: scipy.stats.ttest_rel
    let a = [7.2, 6.8, 8.1, 5.9, 7.5, 6.4, 8.3, 7.0, 6.6, 7.8];
    let b = [6.5, 6.9, 7.2, 5.1, 7.0, 6.6, 7.4, 6.2, 6.0, 7.1];
    let t = paired_t(&a, &b).map_err(|e| e.to_string())?;
    let (dt, dp) = ((t.t - 4.4835883065424404).abs(), (t.p - 0.0015245235379904721).abs());
    if dt > 1e-6 || dp > 1e-4 {
        problems.push(format!("paired t {}/{} (|dt| {dt:e}, |dp| {dp:e})", t.t, t.p));
    }

    let d: Vec<String> = ["approve the loan", "close the branch", "hire staff"].map(String::from).to_vec();
    let q: Vec<String> = ["loan default rate", "branch revenue by loan", "staff turnover rate"].map(String::from).to_vec();
    let expected = [
        [0.22275040488381695, 0.18405073876837258, 0.0],
        [0.0, 0.24734993414004006, 0.0],
        [0.0, 0.0, 0.33955684049730894],
    ];
    let table = cosine_table(&d, &q).map_err(|e| e.to_string())?;
    let max_cos_dev = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (table[i][j] - expected[i][j]).abs())
        .fold(0.0, f64::max);
    let matched: Vec<usize> = tfidf_match(&d, &q).map_err(|e| e.to_string())?.iter().map(|m| m.question_idx).collect();
    if max_cos_dev > 1e-9 || matched != [0, 1, 2] {
        problems.push(format!("tfidf table dev {max_cos_dev:e}, matches {matched:?}"));
    }

    if problems.is_empty() {
        Ok(format!("AC1 1/0.733/-1/3 exact, |dt| {dt:.1e}, |dp| {dp:.1e}, tfidf max dev {max_cos_dev:.1e}"))
    } else {
        Err(problems.join("; "))
    }
}

fn baseline_harness() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sb = sandbox(dir.path(), SandboxConfig::default());
    let deps = EvalDeps::new(Gateway::mock_builtin(GatewayConfig::default()), sb);
    let scenarios = builtin_scenarios();
    ensure(scenarios.len() == 12, || format!("{} scenarios", scenarios.len()))?;
    let started = Instant::now();
    let results = run_eval(&scenarios, &deps, &EvalConfig::default(), None).map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    for r in &results {
        ensure(r.unevaluated.is_none(), || format!("{} unevaluated: {:?}", r.scenario_id, r.unevaluated))?;
        let systems: Vec<SystemName> = r.outputs.iter().filter(|o| !o.failed && !o.questions.is_empty()).map(|o| o.system).collect();
        ensure(systems == SystemName::ALL.to_vec(), || format!("{}: outputs from {systems:?}", r.scenario_id))?;
        for p in &r.passes {
            for d in Dimension::ALL {
                let mut ranks: Vec<u8> = p.ranks.values().map(|m| m[&d]).collect();
                ranks.sort();
                ensure(ranks == [1, 2, 3, 4, 5], || format!("{} {d:?}: ranks {ranks:?}", r.scenario_id))?;
            }
        }
    }
    let stats = compute_stats(&results);
    let mut max_dev: f64 = 0.0;
    for d in Dimension::ALL {
        for shares in stats.rank_distribution[&d].values() {
            max_dev = max_dev.max((shares.iter().sum::<f64>() - 1.0).abs());
        }
    }
    ensure(max_dev <= 1e-9, || format!("rank shares off by {max_dev:e}"))?;
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("12 scenarios x 5 systems, strict 1-5 ranks, share sums within {max_dev:.0e}, {secs:.1}s"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("hv-property-suite", hv_property_suite),
        ("explanatory-density", explanatory_density),
        ("subset-search-oracle", subset_search_oracle),
        ("taxonomy-gate", taxonomy_gate),
        ("pipeline-calls-determinism", pipeline_determinism),
        ("critic-pair-uniformity", critic_uniformity),
        ("sql-sandbox", sql_sandbox),
        ("sse-contract", sse_contract),
        ("statistics-oracle", statistics_oracle),
        ("baseline-harness", baseline_harness),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
