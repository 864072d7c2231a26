use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::baselines::{run_system, EvalDeps, SystemOutput};
use super::scenarios::{DecisionType, ScenarioPair};
use super::slow::{slow_evaluate, Dimension, EvaluationPass};
use super::stats::{gwet_ac1, paired_t, rank_shares, win_rate, PairedT, RatingMatrix};
use super::{EvalError, SystemName};
use crate::util::parallel_map;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub seed: u64,
    pub systems: Vec<SystemName>,
    /// Independent evaluator passes; two or more enable agreement statistics.
    pub passes: u32,
    /// Scenarios evaluated concurrently.
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            seed: 20250101,
            systems: SystemName::ALL.to_vec(),
            passes: 2,
            workers: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvaluation {
    pub scenario_id: String,
    pub decision_type: DecisionType,
    pub seed: u64,
    pub outputs: Vec<SystemOutput>,
    pub passes: Vec<EvaluationPass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unevaluated: Option<String>,
}

impl ScenarioEvaluation {
    /// Ranks from the first evaluator pass, when the scenario was evaluated.
    pub fn primary_ranks(&self) -> Option<&BTreeMap<SystemName, BTreeMap<Dimension, u8>>> {
        if self.unevaluated.is_some() {
            return None;
        }
        self.passes.first().map(|p| &p.ranks)
    }
}

fn scenario_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

fn evaluate_one(scenario: &ScenarioPair, index: usize, deps: &EvalDeps, config: &EvalConfig) -> ScenarioEvaluation {
    let seed = scenario_seed(config.seed, index);
    let outputs: Vec<SystemOutput> = config
        .systems
        .iter()
        .map(|s| run_system(*s, scenario, deps, seed))
        .collect();
    let mut passes = Vec::new();
    let mut unevaluated = None;
    match deps.sandbox.introspect(&scenario.database_id) {
        Ok(profile) => {
            for pass in 1..=config.passes.max(1) {
                match slow_evaluate(scenario, &outputs, &profile, &deps.gateway, seed, pass) {
                    Ok(p) => passes.push(p),
                    Err(e) => {
                        unevaluated = Some(e.to_string());
                        break;
                    }
                }
            }
        }
        Err(e) => unevaluated = Some(e.to_string()),
    }
    ScenarioEvaluation {
        scenario_id: scenario.scenario_id.clone(),
        decision_type: scenario.decision_type,
        seed,
        outputs,
        passes,
        unevaluated,
    }
}

/// Runs every system and the evaluator on each scenario; when `out_dir` is
/// given, one `<scenario_id>.json` file is written per scenario.
pub fn run_eval(
    scenarios: &[ScenarioPair],
    deps: &EvalDeps,
    config: &EvalConfig,
    out_dir: Option<&Path>,
) -> Result<Vec<ScenarioEvaluation>, EvalError> {
    if config.systems.is_empty() {
        return Err(EvalError::Validation("no systems selected".into()));
    }
    let io = |path: &Path, e: std::io::Error| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    let results = parallel_map(scenarios, config.workers, |i, s| evaluate_one(s, i, deps, config));
    if let Some(dir) = out_dir {
        for r in &results {
            let path = dir.join(format!("{}.json", r.scenario_id));
            let text = serde_json::to_string_pretty(r).expect("evaluation serializes");
            std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        }
    }
    Ok(results)
}

/// Reads every `*.json` evaluation in `dir`, in file-name order.
pub fn load_results(dir: &Path) -> Result<Vec<ScenarioEvaluation>, EvalError> {
    let io = |path: &Path, message: String| EvalError::Io {
        path: path.display().to_string(),
        message,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| io(dir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| io(p, e.to_string()))?;
            serde_json::from_str(&text).map_err(|e| io(p, e.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestEntry {
    pub baseline: SystemName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<PairedT>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub scenarios: usize,
    pub evaluated: usize,
    pub unevaluated: Vec<String>,
    /// Per-system count of scenarios where the system failed.
    pub failures: BTreeMap<SystemName, usize>,
    /// Dimension → system → share of ranks 1..=5 (first evaluator pass).
    pub rank_distribution: BTreeMap<Dimension, BTreeMap<SystemName, Vec<f64>>>,
    /// Dimension → baseline → fraction of scenarios where askwell ranks strictly better.
    pub win_rates: BTreeMap<Dimension, BTreeMap<SystemName, Option<f64>>>,
    /// Dimension → paired t-tests of askwell ranks against each baseline.
    pub t_tests: BTreeMap<Dimension, Vec<TTestEntry>>,
    /// Dimension → AC1 between the first two evaluator passes over (scenario, system) ranks.
    pub agreement: BTreeMap<Dimension, Option<f64>>,
}

pub fn compute_stats(results: &[ScenarioEvaluation]) -> StatsReport {
    let evaluated: Vec<&ScenarioEvaluation> = results.iter().filter(|r| r.primary_ranks().is_some()).collect();
    let mut failures: BTreeMap<SystemName, usize> = BTreeMap::new();
    for r in results {
        for o in &r.outputs {
            *failures.entry(o.system).or_default() += usize::from(o.failed);
        }
    }
    let systems: Vec<SystemName> = failures.keys().copied().collect();
    let rank_of = |r: &ScenarioEvaluation, s: SystemName, d: Dimension| -> Option<f64> {
        r.primary_ranks()?.get(&s)?.get(&d).map(|v| *v as f64)
    };
    let ok = |r: &ScenarioEvaluation, s: SystemName| r.outputs.iter().any(|o| o.system == s && !o.failed);

    let mut rank_distribution = BTreeMap::new();
    let mut win_rates = BTreeMap::new();
    let mut t_tests = BTreeMap::new();
    let mut agreement = BTreeMap::new();
    for d in Dimension::ALL {
        let mut dist = BTreeMap::new();
        for &s in &systems {
            let ranks: Vec<u8> = evaluated.iter().filter_map(|r| rank_of(r, s, d)).map(|v| v as u8).collect();
            dist.insert(s, rank_shares(&ranks, 5));
        }
        rank_distribution.insert(d, dist);

        let mut wins = BTreeMap::new();
        let mut tests = Vec::new();
        if systems.contains(&SystemName::Askwell) {
            for &b in systems.iter().filter(|s| **s != SystemName::Askwell) {
                // failed runs are excluded from the pairwise statistics
                let pairs: Vec<(f64, f64)> = evaluated
                    .iter()
                    .filter(|r| ok(r, SystemName::Askwell) && ok(r, b))
                    .filter_map(|r| Some((rank_of(r, SystemName::Askwell, d)?, rank_of(r, b, d)?)))
                    .collect();
                let a: Vec<Option<f64>> = pairs.iter().map(|p| Some(p.0)).collect();
                let o: Vec<Option<f64>> = pairs.iter().map(|p| Some(p.1)).collect();
                wins.insert(b, win_rate(&a, &o, false));
                let (av, bv): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
                tests.push(match paired_t(&av, &bv) {
                    Ok(t) => TTestEntry {
                        baseline: b,
                        result: Some(t),
                        note: None,
                    },
                    Err(e) => TTestEntry {
                        baseline: b,
                        result: None,
                        note: Some(e.to_string()),
                    },
                });
            }
        }
        win_rates.insert(d, wins);
        t_tests.insert(d, tests);

        let with_two: Vec<&&ScenarioEvaluation> = evaluated.iter().filter(|r| r.passes.len() >= 2).collect();
        let mut items = Vec::new();
        let mut values = Vec::new();
        for r in &with_two {
            for &s in &systems {
                let a = r.passes[0].ranks.get(&s).and_then(|m| m.get(&d));
                let b = r.passes[1].ranks.get(&s).and_then(|m| m.get(&d));
                if let (Some(a), Some(b)) = (a, b) {
                    items.push(format!("{}/{s}", r.scenario_id));
                    values.push(vec![a.to_string(), b.to_string()]);
                }
            }
        }
        let ac1 = if items.is_empty() {
            None
        } else {
            let m = RatingMatrix::complete(items, vec!["pass-1".into(), "pass-2".into()], values)
                .with_categories((1..=5).map(|r: u8| r.to_string()).collect());
            gwet_ac1(&m).ok()
        };
        agreement.insert(d, ac1);
    }

    StatsReport {
        scenarios: results.len(),
        evaluated: evaluated.len(),
        unevaluated: results
            .iter()
            .filter(|r| r.unevaluated.is_some())
            .map(|r| r.scenario_id.clone())
            .collect(),
        failures,
        rank_distribution,
        win_rates,
        t_tests,
        agreement,
    }
}

impl StatsReport {
    /// Plain-text tables for terminal output.
    pub fn render(&self) -> String {
        let mut out = format!(
            "scenarios: {}  evaluated: {}  unevaluated: {}\n",
            self.scenarios,
            self.evaluated,
            self.unevaluated.len()
        );
        out.push_str("failures:");
        for (s, n) in &self.failures {
            out.push_str(&format!(" {s}={n}"));
        }
        out.push('\n');
        for d in Dimension::ALL {
            out.push_str(&format!("\n[{d}]\n"));
            match self.agreement.get(&d).copied().flatten() {
                Some(v) => out.push_str(&format!("  AC1 (pass 1 vs 2): {v:.3}\n")),
                None => out.push_str("  AC1: n/a\n"),
            }
            out.push_str(&format!("  {:<18} {:>6} {:>6} {:>6} {:>6} {:>6}\n", "rank share", 1, 2, 3, 4, 5));
            for (s, shares) in &self.rank_distribution[&d] {
                out.push_str(&format!("  {:<18}", s.as_str()));
                for v in shares {
                    out.push_str(&format!(" {v:>6.3}"));
                }
                out.push('\n');
            }
            for t in &self.t_tests[&d] {
                let win = self.win_rates[&d].get(&t.baseline).copied().flatten();
                let win = win.map(|w| format!("{w:.3}")).unwrap_or_else(|| "n/a".into());
                match &t.result {
                    Some(r) => out.push_str(&format!(
                        "  askwell vs {:<16} win {win}  t={:.3} df={} p={:.4}\n",
                        t.baseline.as_str(),
                        r.t,
                        r.df,
                        r.p
                    )),
                    None => out.push_str(&format!(
                        "  askwell vs {:<16} win {win}  t-test: {}\n",
                        t.baseline.as_str(),
                        t.note.as_deref().unwrap_or("n/a")
                    )),
                }
            }
        }
        out
    }
}
