use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use askwell_core::eval::{
    builtin_scenarios, compute_stats, load_results, load_scenarios, parse_systems, run_eval, tfidf_match, EvalConfig,
    EvalDeps,
};
use askwell_core::kb::{load_taxonomy, BiasCategory, BiasTaxonomy};
use askwell_core::llm::{Gateway, GatewayConfig};
use askwell_core::nl2sql::{build_fixture_dbs, DatabaseRegistry, Sandbox, SandboxConfig, FIXTURE_SEED};
use askwell_hv::{run_property_suite, SuiteConfig};
use askwell_server::ServerConfig;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "askwell", version, about = "Decision-aware question refinement for data analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the information-theoretic property suite over synthetic networks.
    HvValidate {
        #[arg(long, default_value_t = SuiteConfig::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = SuiteConfig::default().networks)]
        networks: usize,
        /// Write the machine-readable report here (`-` for stdout).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check the bias taxonomy: entry count, category counts, unique ids.
    KbValidate {
        /// Taxonomy file; the bundled taxonomy when omitted.
        #[arg(long)]
        taxonomy: Option<PathBuf>,
    },
    /// Write the fixture SQLite databases into a directory.
    DbBuild {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = FIXTURE_SEED)]
        seed: u64,
    },
    /// Baseline comparison harness.
    Eval {
        #[command(subcommand)]
        command: EvalCommand,
    },
    /// Start the HTTP + SSE server.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Mock,
    Live,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Run every selected system on each scenario and rank the outputs.
    Run {
        /// JSON-lines scenario file; the bundled 12 scenarios when omitted.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        /// `all` or a comma-separated list of system names.
        #[arg(long, default_value = "all")]
        systems: String,
        #[arg(long, default_value_t = EvalConfig::default().seed)]
        seed: u64,
        #[arg(long, default_value = "eval-results")]
        out: PathBuf,
        /// Database directory; fixture databases are built under `<out>/databases` when omitted.
        #[arg(long)]
        db_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "mock")]
        backend: Backend,
        #[arg(long, default_value_t = EvalConfig::default().passes)]
        passes: u32,
        #[arg(long, default_value_t = EvalConfig::default().workers)]
        workers: usize,
    },
    /// Aggregate stored results into rank, win-rate, t-test and agreement tables.
    Stats {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Pair decision descriptions with questions by TF-IDF cosine similarity.
    Match {
        /// One decision description per line.
        #[arg(long)]
        decisions: PathBuf,
        /// One question per line.
        #[arg(long)]
        questions: PathBuf,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::HvValidate { seed, networks, json } => hv_validate(seed, networks, json.as_deref()),
        Command::KbValidate { taxonomy } => kb_validate(taxonomy.as_deref()),
        Command::DbBuild { out, seed } => {
            build_fixture_dbs(&out, seed)?;
            println!("fixture databases written to {}", out.display());
            Ok(true)
        }
        Command::Eval { command } => match command {
            EvalCommand::Run {
                scenarios,
                systems,
                seed,
                out,
                db_dir,
                backend,
                passes,
                workers,
            } => eval_run(EvalRunArgs {
                scenarios,
                systems,
                seed,
                out,
                db_dir,
                backend,
                passes,
                workers,
            }),
            EvalCommand::Stats { results, json } => eval_stats(&results, json),
            EvalCommand::Match { decisions, questions } => eval_match(&decisions, &questions),
        },
        Command::Serve { config } => {
            let config = ServerConfig::load(&config)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(askwell_server::serve(&config))?;
            Ok(true)
        }
    }
}

fn hv_validate(seed: u64, networks: usize, json: Option<&Path>) -> Result<bool> {
    let config = SuiteConfig {
        seed,
        networks,
        ..SuiteConfig::default()
    };
    let report = run_property_suite(&config)?;
    let text = serde_json::to_string_pretty(&report)?;
    match json {
        Some(p) if p == Path::new("-") => println!("{text}"),
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => {}
    }
    eprint!("{}", report.summary());
    Ok(report.passed())
}

fn kb_validate(path: Option<&Path>) -> Result<bool> {
    let taxonomy = match path {
        Some(p) => load_taxonomy(p)?,
        None => BiasTaxonomy::builtin(),
    };
    let counts = taxonomy.category_counts();
    let mut ok = true;
    for cat in BiasCategory::ALL {
        let got = counts.get(&cat).copied().unwrap_or(0);
        let expected = cat.expected_count();
        ok &= got == expected;
        println!("{:<4} {:<28} {got:>3} / {expected}", if got == expected { "ok" } else { "BAD" }, cat.as_str());
    }
    println!("{} entries, taxonomy version {}", taxonomy.len(), taxonomy.version());
    Ok(ok)
}

struct EvalRunArgs {
    scenarios: Option<PathBuf>,
    systems: String,
    seed: u64,
    out: PathBuf,
    db_dir: Option<PathBuf>,
    backend: Backend,
    passes: u32,
    workers: usize,
}

fn eval_run(args: EvalRunArgs) -> Result<bool> {
    let scenarios = match &args.scenarios {
        Some(p) => load_scenarios(p)?,
        None => builtin_scenarios(),
    };
    let db_dir = match args.db_dir {
        Some(d) => d,
        None => {
            let d = args.out.join("databases");
            build_fixture_dbs(&d, FIXTURE_SEED)?;
            d
        }
    };
    let mut registry = DatabaseRegistry::new();
    registry.add_dir(&db_dir)?;
    registry.add_bird_from_env()?;
    for s in &scenarios {
        if !registry.contains(&s.database_id) {
            bail!("scenario {} needs database '{}', not found in {}", s.scenario_id, s.database_id, db_dir.display());
        }
    }
    let gateway = match args.backend {
        Backend::Mock => Gateway::mock_builtin(GatewayConfig::default()),
        Backend::Live => Gateway::live_from_env(GatewayConfig::default())?,
    };
    let deps = EvalDeps::new(gateway, Arc::new(Sandbox::new(registry, SandboxConfig::default())));
    let config = EvalConfig {
        seed: args.seed,
        systems: parse_systems(&args.systems)?,
        passes: args.passes,
        workers: args.workers.max(1),
    };
    let results = run_eval(&scenarios, &deps, &config, Some(&args.out))?;
    let unevaluated = results.iter().filter(|r| r.unevaluated.is_some()).count();
    println!(
        "{} scenarios evaluated, {unevaluated} unevaluated; results in {}",
        results.len() - unevaluated,
        args.out.display()
    );
    print!("{}", compute_stats(&results).render());
    Ok(unevaluated == 0)
}

fn eval_stats(dir: &Path, json: bool) -> Result<bool> {
    let results = load_results(dir)?;
    if results.is_empty() {
        bail!("no results found in {}", dir.display());
    }
    let report = compute_stats(&results);
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.render());
    }
    Ok(true)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn eval_match(decisions: &Path, questions: &Path) -> Result<bool> {
    let decisions = read_lines(decisions)?;
    let questions = read_lines(questions)?;
    let matches = tfidf_match(&decisions, &questions)?;
    let rows: Vec<serde_json::Value> = matches
        .iter()
        .map(|m| {
            serde_json::json!({
                "decision": decisions[m.decision_idx],
                "question": questions[m.question_idx],
                "decisionIndex": m.decision_idx,
                "questionIndex": m.question_idx,
                "cosine": m.cosine,
            })
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&rows)?);
    Ok(true)
}
