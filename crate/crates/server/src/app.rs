//! Shared server state and its construction.

use std::ops::Deref;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, Weak};
use std::time::{Duration, Instant};

use chrono::Utc;
use proofbench_core::feedback::{HintCatalog, RuleCatalog};
use proofbench_core::history::{MemoryStore, SqliteStore, Store, SubmissionLog, UserProfile};
use proofbench_core::prover::{ProverResult, ProverStatus};
use proofbench_core::syntax::SyntaxProfile;
use proofbench_core::tutorial::{Course, Tutorial};
use proofbench_core::Role;
use proofbench_gateway::mock::MockMode;
use proofbench_gateway::{FixtureSet, GatewayError, InProcessLauncher, Launcher, MockConfig, Pool, ProcessLauncher};
use thiserror::Error;
use tokio::task::JoinHandle;

use crate::auth::{Principal, TokenVerifier};
use crate::check::{CheckRequest, Checks};
use crate::config::{Config, ProverMode};
use crate::content::{Content, ContentError};
use crate::error::ApiError;
use crate::hub::Hub;
use crate::sessions::Sessions;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("issuer configuration: {0}")]
    Issuers(String),
    #[error(transparent)]
    Content(#[from] ContentError),
    #[error("history store: {0}")]
    Store(String),
    #[error("prover pool: {0}")]
    Pool(#[from] GatewayError),
}

pub struct App {
    pub config: Config,
    pub verifier: TokenVerifier,
    pub content: Content,
    pub log: SubmissionLog,
    pub pool: Arc<Pool>,
    pub sessions: Sessions,
    pub hub: Hub,
    pub checks: Checks,
    pub rules: RuleCatalog,
    pub hints: HintCatalog,
    sizing: tokio::sync::Mutex<()>,
    tasks: Mutex<Vec<JoinHandle<()>>>,
}

#[derive(Clone)]
pub struct AppState(pub Arc<App>);

impl Deref for AppState {
    type Target = App;

    fn deref(&self) -> &App {
        &self.0
    }
}

impl Drop for App {
    fn drop(&mut self) {
        for t in self.tasks.get_mut().unwrap_or_else(|e| e.into_inner()).drain(..) {
            t.abort();
        }
    }
}

fn launcher(config: &Config) -> Result<Arc<dyn Launcher>, StartupError> {
    let fixtures = config.fixture_path();
    let load_fixtures = || -> Result<FixtureSet, StartupError> {
        if fixtures.exists() {
            FixtureSet::load(&fixtures).map_err(StartupError::Pool)
        } else {
            tracing::warn!(path = %fixtures.display(), "no fixtures found");
            Ok(FixtureSet::default())
        }
    };
    Ok(match config.prover_mode {
        ProverMode::Fixture => Arc::new(InProcessLauncher::new(MockConfig::fixture(load_fixtures()?))),
        ProverMode::Structural => Arc::new(InProcessLauncher::new(MockConfig::structural())),
        ProverMode::External => {
            let binary = config.mock_binary.clone().unwrap_or_else(|| {
                std::env::current_exe()
                    .ok()
                    .and_then(|p| p.parent().map(|d| d.join("pb-mock-prover")))
                    .unwrap_or_else(|| PathBuf::from("pb-mock-prover"))
            });
            Arc::new(ProcessLauncher {
                binary,
                mode: MockMode::Fixture,
                fixtures: fixtures.exists().then_some(fixtures),
            })
        }
    })
}

impl App {
    pub async fn build(config: Config) -> Result<AppState, StartupError> {
        let launcher = launcher(&config)?;
        App::build_with(config, launcher).await
    }

    pub async fn build_with(config: Config, launcher: Arc<dyn Launcher>) -> Result<AppState, StartupError> {
        let verifier = TokenVerifier::new(&config.issuers).map_err(StartupError::Issuers)?;
        let content = Content::new();
        if config.tutorials_dir.is_dir() {
            let n = content.load_dir(&config.tutorials_dir)?;
            tracing::info!(tutorials = n, dir = %config.tutorials_dir.display(), "loaded tutorials");
        }
        let store: Arc<dyn Store> = match &config.data_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| StartupError::Store(e.to_string()))?;
                Arc::new(SqliteStore::open(dir.join("history.sqlite")).map_err(|e| StartupError::Store(e.to_string()))?)
            }
            None => Arc::new(MemoryStore::default()),
        };
        let log = SubmissionLog::new(store).recording_identical(config.record_identical);
        let pool = Arc::new(Pool::init(config.pool.clone(), launcher).await?);
        let sessions = Sessions::new(pool.clone(), config.session_idle);
        let app = Arc::new(App {
            config,
            verifier,
            content,
            log,
            pool,
            sessions,
            hub: Hub::default(),
            checks: Checks::default(),
            rules: RuleCatalog::bundled(),
            hints: HintCatalog::bundled(),
            sizing: tokio::sync::Mutex::new(()),
            tasks: Mutex::new(Vec::new()),
        });
        let tasks = vec![
            tokio::spawn(health_loop(Arc::downgrade(&app), app.config.pool.heartbeat_interval)),
            tokio::spawn(idle_loop(
                Arc::downgrade(&app),
                (app.config.session_idle / 4).clamp(Duration::from_millis(50), Duration::from_secs(30)),
            )),
        ];
        *app.tasks.lock().unwrap_or_else(|e| e.into_inner()) = tasks;
        Ok(AppState(app))
    }

    /// Record the caller's minimal profile on first sight.
    pub fn register(&self, p: &Principal) -> Result<(), ApiError> {
        let store = self.log.store();
        if store.profile(&p.user_id)?.is_none() {
            store.put_profile(&UserProfile {
                user_id: p.user_id.clone(),
                username: p.username.clone(),
                issuer: p.issuer.clone(),
                admin: p.is(Role::Admin),
                created: Utc::now(),
            })?;
        }
        Ok(())
    }

    /// Whether `p` may work in `course`: admin, owner, or enrolled.
    pub fn in_course(&self, p: &Principal, course: &Course) -> bool {
        p.is(Role::Admin) || course.owner == p.user_id || course.roster.contains(&p.user_id)
    }

    pub fn manages_course(&self, p: &Principal, course: &Course) -> bool {
        p.is(Role::Admin) || (p.is(Role::Teacher) && course.owner == p.user_id)
    }

    pub fn resolve_check(
        &self,
        p: &Principal,
        req: &CheckRequest,
    ) -> Result<(Course, Arc<Tutorial>, Arc<SyntaxProfile>), ApiError> {
        let course =
            self.content.course(&req.course_id).ok_or_else(|| ApiError::not_found("course", &req.course_id))?;
        if !self.in_course(p, &course) {
            return Err(ApiError::forbidden("not enrolled in this course"));
        }
        if !course.tutorials.contains(&req.tutorial_id) {
            return Err(ApiError::not_found("tutorial", &req.tutorial_id));
        }
        let entry =
            self.content.tutorial(&req.tutorial_id).ok_or_else(|| ApiError::not_found("tutorial", &req.tutorial_id))?;
        let tasks = entry.tutorial.task_ids();
        if let Some(bad) = req.blocks.keys().find(|b| !tasks.contains(*b)) {
            return Err(ApiError::invalid(
                "invalid-block",
                format!("`{bad}` is not a task block of `{}`", req.tutorial_id),
            ));
        }
        let profile = self
            .content
            .profile(&course.profile)
            .ok_or_else(|| ApiError::internal(format!("course profile `{}` is missing", course.profile)))?;
        Ok((course, entry.tutorial, profile))
    }

    /// Check `text` on the user's session for `course`, renewing the
    /// session once if it had been torn down.
    pub async fn prove(&self, user: &str, course: &str, text: &str) -> Result<ProverResult, ApiError> {
        for attempt in 0..2 {
            let handle = self.sessions.get(user, course).await?;
            match self.pool.check_theory(&handle, text, None).await {
                Ok(r) => {
                    if matches!(r.status, ProverStatus::Timeout | ProverStatus::ProtocolError) {
                        self.sessions.invalidate(user, course).await;
                    }
                    return Ok(r);
                }
                Err(GatewayError::InvalidHandle) if attempt == 0 => self.sessions.invalidate(user, course).await,
                Err(e) => return Err(e.into()),
            }
        }
        Err(ApiError::internal("prover session could not be renewed"))
    }

    /// Instances wanted for all current rosters, never below the configured
    /// initial size.
    pub fn wanted_instances(&self) -> usize {
        let per_course: usize =
            self.content.courses().iter().map(|c| self.config.pool.instances_for_roster(c.roster.len())).sum();
        per_course.max(self.config.pool.initial).min(self.config.pool.max)
    }

    /// Scale the pool to [`App::wanted_instances`].
    pub async fn resize_pool(&self) -> Result<usize, ApiError> {
        let _guard = self.sizing.lock().await;
        let target = self.wanted_instances();
        let serving = self.pool.status().instances.iter().filter(|i| !i.draining).count();
        if serving != target {
            self.pool.scale(target).await?;
        }
        Ok(target)
    }
}

async fn health_loop(app: Weak<App>, every: Duration) {
    let mut tick = tokio::time::interval(every);
    tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    tick.tick().await;
    loop {
        tick.tick().await;
        let Some(app) = app.upgrade() else { return };
        for o in app.pool.health_sweep().await {
            if o.before != o.after {
                tracing::info!(instance = o.id, before = ?o.before, after = ?o.after, "instance state changed");
            }
        }
    }
}

async fn idle_loop(app: Weak<App>, every: Duration) {
    loop {
        tokio::time::sleep(every).await;
        let Some(app) = app.upgrade() else { return };
        let n = app.sessions.release_idle(Instant::now()).await;
        if n > 0 {
            tracing::debug!(released = n, "idle prover sessions released");
        }
    }
}
