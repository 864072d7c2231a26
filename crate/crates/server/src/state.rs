use std::collections::HashSet;
use std::sync::Arc;

use askwell_core::llm::{Gateway, LlmError};
use askwell_core::nl2sql::{DatabaseRegistry, Sandbox};
use askwell_core::pipeline::Pipeline;

use crate::config::{BackendChoice, ServerConfig};
use crate::jobs::JobHub;
use crate::store::Store;
use crate::ServerError;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub pipeline: Pipeline,
    pub hub: Arc<JobHub>,
    pub(crate) tokens: Arc<HashSet<String>>,
    pub max_jobs_per_session: usize,
    pub default_seed: u64,
    pub job_deadline: std::time::Duration,
}

impl AppState {
    pub fn new(store: Store, pipeline: Pipeline, tokens: HashSet<String>, config: &ServerConfig) -> Self {
        Self {
            store: Arc::new(store),
            pipeline,
            hub: Arc::new(JobHub::default()),
            tokens: Arc::new(tokens),
            max_jobs_per_session: config.max_running_jobs_per_session.max(1),
            default_seed: config.pipeline.seed,
            job_deadline: std::time::Duration::from_secs(config.pipeline.deadline_secs.max(1)),
        }
    }

    /// Registry, gateway and store from the config; tokens from the
    /// configured environment variable.
    pub fn from_config(config: &ServerConfig) -> Result<Self, ServerError> {
        let mut registry = DatabaseRegistry::new();
        for (id, path) in &config.databases {
            registry.register(id.clone(), path.clone());
        }
        if let Some(dir) = &config.database_dir {
            registry.add_dir(dir)?;
        }
        registry.add_bird_from_env()?;
        let gateway = match config.backend {
            BackendChoice::Mock => match &config.mock_fixture_dir {
                Some(dir) => Gateway::mock_from_dir(dir, config.gateway.clone())?,
                None => Gateway::mock_builtin(config.gateway.clone()),
            },
            BackendChoice::Live => Gateway::live_from_env(config.gateway.clone()).map_err(|e: LlmError| e)?,
        };
        let sandbox = Arc::new(Sandbox::new(registry, config.sandbox));
        let store = Store::open(&config.store_path)?;
        let tokens = config.tokens_from_env()?;
        Ok(Self::new(store, Pipeline::new(gateway, sandbox), tokens, config))
    }
}

/// Binds and serves until the process is stopped.
pub async fn serve(config: &ServerConfig) -> Result<(), ServerError> {
    let state = AppState::from_config(config)?;
    let listener = tokio::net::TcpListener::bind(&config.bind).await?;
    tracing::info!(
        "askwell listening on {} ({} databases, {:?} backend)",
        listener.local_addr()?,
        state.pipeline.sandbox.registry().ids().count(),
        config.backend
    );
    axum::serve(listener, crate::routes::build_router(state)).await?;
    Ok(())
}
