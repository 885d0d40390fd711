//! The check pipeline: syntax and restriction checks, history, assembly,
//! prover call, feedback mapping and outcome update.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex, Weak};
use std::time::Duration;

use chrono::Utc;
use proofbench_core::feedback::{diagnostic_item, enrich, label, FeedbackItem, FeedbackKind, FeedbackOrigin};
use proofbench_core::prover::{ProverResult, ProverStatus};
use proofbench_core::syntax::{analyze, Layer, Severity, SourceSpan};
use proofbench_core::tutorial::{assemble_theory, MappedOrigin, Outcome, Tutorial, TutorialState};
use proofbench_core::Locale;
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot};

use crate::app::{App, AppState};
use crate::auth::Principal;
use crate::error::{ApiError, ErrorBody};
use crate::hub::{MessageType, StreamMessage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRequest {
    pub course_id: String,
    pub tutorial_id: String,
    /// Task block id to content.
    pub blocks: BTreeMap<String, String>,
    #[serde(default)]
    pub request_id: Option<String>,
    #[serde(default)]
    pub locale: Option<Locale>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    FinishedOk,
    FinishedFailed,
    ProtocolError,
    Timeout,
    /// Stopped by a blocking restriction before reaching the prover.
    Rejected,
}

impl From<ProverStatus> for CheckStatus {
    fn from(s: ProverStatus) -> Self {
        match s {
            ProverStatus::FinishedOk => CheckStatus::FinishedOk,
            ProverStatus::FinishedFailed => CheckStatus::FinishedFailed,
            ProverStatus::ProtocolError => CheckStatus::ProtocolError,
            ProverStatus::Timeout => CheckStatus::Timeout,
        }
    }
}

/// A proof state positioned inside a block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockState {
    pub block_id: String,
    pub offset: usize,
    pub text: String,
    pub subgoals: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recorded {
    pub block_id: String,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResponse {
    pub request_id: String,
    pub status: CheckStatus,
    /// Prover messages, enriched.
    pub feedback: Vec<FeedbackItem>,
    /// Outer-syntax and restriction findings.
    pub diagnostics: Vec<FeedbackItem>,
    pub states: Vec<BlockState>,
    pub outcomes: BTreeMap<String, Outcome>,
    /// Diffs written for this request.
    pub recorded: Vec<Recorded>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum CheckRecord {
    Pending,
    Done { result: CheckResponse },
    Failed { status: u16, error: ErrorBody },
}

impl CheckRecord {
    fn from_outcome(outcome: Result<CheckResponse, ApiError>) -> Self {
        match outcome {
            Ok(result) => CheckRecord::Done { result },
            Err(e) => CheckRecord::Failed { status: e.status.as_u16(), error: e.body },
        }
    }
}

pub(crate) fn unavailable_notice(status: ProverStatus, locale: Locale) -> &'static str {
    match (status, locale) {
        (ProverStatus::Timeout, Locale::En) => "The prover did not answer in time. Please try again.",
        (ProverStatus::Timeout, Locale::De) => {
            "Der Beweiser hat nicht rechtzeitig geantwortet. Bitte versuche es erneut."
        }
        (_, Locale::En) => "The connection to the prover failed. Please try again.",
        (_, Locale::De) => "Die Verbindung zum Beweiser ist fehlgeschlagen. Bitte versuche es erneut.",
    }
}

/// Stored state for the user, adapted to the current tutorial version.
pub(crate) fn load_state(app: &App, user_id: &str, tutorial: &Tutorial) -> Result<TutorialState, ApiError> {
    let stored = app.log.store().load_state(user_id, &tutorial.id)?;
    Ok(match stored {
        Some(s) if s.check_belongs_to(tutorial).is_ok() => s,
        Some(old) => {
            let mut s = TutorialState::fresh(user_id, tutorial);
            for (id, content) in old.contents {
                if s.contents.contains_key(&id) {
                    let outcome = old.outcomes.get(&id).copied().unwrap_or_default();
                    s.contents.insert(id.clone(), content);
                    s.outcomes.insert(id, outcome);
                }
            }
            s
        }
        None => TutorialState::fresh(user_id, tutorial),
    })
}

pub async fn run_check(app: &App, principal: &Principal, req: &CheckRequest) -> Result<CheckResponse, ApiError> {
    let (course, tutorial, profile) = app.resolve_check(principal, req)?;
    let locale = req.locale.unwrap_or(app.config.locale_default);
    let request_id = req.request_id.clone().unwrap_or_default();
    let user = principal.user_id.as_str();

    let mut diagnostics = Vec::new();
    let mut blocked = false;
    for (block_id, content) in &req.blocks {
        for d in analyze(content, &profile, locale) {
            blocked |= profile.blocking && d.layer == Layer::Restriction && d.is_error();
            diagnostics.push(diagnostic_item(block_id, &d, &app.hints, locale));
        }
    }
    let mut state = load_state(app, user, &tutorial)?;
    if blocked {
        return Ok(CheckResponse {
            request_id,
            status: CheckStatus::Rejected,
            feedback: Vec::new(),
            diagnostics,
            states: Vec::new(),
            outcomes: state.outcomes,
            recorded: Vec::new(),
        });
    }

    let now = Utc::now();
    let mut recorded = Vec::new();
    for (block_id, content) in &req.blocks {
        if let Some(d) = app.log.record_submission(user, &course.id, &tutorial.id, block_id, content, now)? {
            recorded.push(Recorded { block_id: block_id.clone(), seq: d.seq });
        }
        state.set_content(block_id, content.clone()).map_err(|e| ApiError::invalid("invalid-block", e.to_string()))?;
    }
    app.log.store().save_state(&state)?;

    let assembled = assemble_theory(&tutorial, &state).map_err(|e| ApiError::internal(e.to_string()))?;
    let result = app.prove(user, &course.id, &assembled.text).await?;

    let feedback = match result.status {
        ProverStatus::FinishedOk | ProverStatus::FinishedFailed => enrich(&result, &assembled, &app.hints, locale),
        aborted => aborted_feedback(&result, aborted, locale),
    };
    let states = result
        .states
        .iter()
        .filter_map(|s| match assembled.map_span(SourceSpan::empty(s.position)) {
            Ok(MappedOrigin::Block { block_id, span, .. }) => {
                Some(BlockState { block_id, offset: span.start, text: s.text.clone(), subgoals: s.subgoals })
            }
            _ => None,
        })
        .collect();

    if matches!(result.status, ProverStatus::FinishedOk | ProverStatus::FinishedFailed) {
        update_outcomes(&mut state, &tutorial, &feedback, &diagnostics, app.config.block_after_failure);
        app.log.store().save_state(&state)?;
    }

    Ok(CheckResponse {
        request_id,
        status: result.status.into(),
        feedback,
        diagnostics,
        states,
        outcomes: state.outcomes,
        recorded,
    })
}

fn aborted_feedback(result: &ProverResult, status: ProverStatus, locale: Locale) -> Vec<FeedbackItem> {
    result
        .messages
        .iter()
        .map(|m| FeedbackItem {
            severity: m.severity.into(),
            kind: FeedbackKind::Prover,
            origin: FeedbackOrigin::Tutorial { notice: unavailable_notice(status, locale).into() },
            label: label(FeedbackKind::Prover, locale).into(),
            raw_text: m.text.clone(),
            hint_id: None,
            hints: Vec::new(),
        })
        .collect()
}

fn update_outcomes(
    state: &mut TutorialState,
    tutorial: &Tutorial,
    feedback: &[FeedbackItem],
    diagnostics: &[FeedbackItem],
    block_after_failure: bool,
) {
    let errors = feedback.iter().chain(diagnostics).filter(|i| i.severity == Severity::Error);
    let mut failed = HashSet::new();
    let mut tutorial_level = false;
    for item in errors {
        match &item.origin {
            FeedbackOrigin::Block { block_id, .. } => {
                failed.insert(block_id.as_str());
            }
            FeedbackOrigin::Tutorial { .. } => tutorial_level = true,
        }
    }
    let mut after_failure = false;
    for (id, _) in tutorial.task_blocks() {
        let outcome = if failed.contains(id) {
            Outcome::Failed
        } else if tutorial_level || after_failure {
            Outcome::Unchecked
        } else {
            Outcome::Ok
        };
        after_failure |= block_after_failure && outcome == Outcome::Failed;
        state.outcomes.insert(id.to_string(), outcome);
    }
}

struct Job {
    principal: Principal,
    request: CheckRequest,
    reply: Option<oneshot::Sender<CheckRecord>>,
}

const RETAINED_RECORDS: usize = 10_000;
const WORKER_IDLE: Duration = Duration::from_secs(300);

/// Check results by (user, request id) and one ordered worker per user.
type RecordKey = (String, String);

#[derive(Default)]
pub struct Checks {
    records: Mutex<(HashMap<RecordKey, CheckRecord>, VecDeque<RecordKey>)>,
    queues: Mutex<HashMap<String, mpsc::UnboundedSender<Job>>>,
}

impl Checks {
    pub fn record(&self, user: &str, request_id: &str) -> Option<CheckRecord> {
        let guard = self.records.lock().unwrap_or_else(|e| e.into_inner());
        guard.0.get(&(user.to_string(), request_id.to_string())).cloned()
    }

    fn store(&self, user: &str, request_id: &str, record: CheckRecord) {
        let mut guard = self.records.lock().unwrap_or_else(|e| e.into_inner());
        let (map, order) = &mut *guard;
        let key = (user.to_string(), request_id.to_string());
        if map.insert(key.clone(), record).is_none() {
            order.push_back(key);
            while order.len() > RETAINED_RECORDS {
                if let Some(old) = order.pop_front() {
                    map.remove(&old);
                }
            }
        }
    }

    /// Queue a validated request behind the user's earlier ones.
    pub fn enqueue(
        &self,
        app: &AppState,
        principal: Principal,
        request: CheckRequest,
        reply: Option<oneshot::Sender<CheckRecord>>,
    ) {
        let user = principal.user_id.clone();
        let request_id = request.request_id.clone().expect("request ids are assigned before queueing");
        self.store(&user, &request_id, CheckRecord::Pending);
        let mut queues = self.queues.lock().unwrap_or_else(|e| e.into_inner());
        let mut job = Job { principal, request, reply };
        if let Some(tx) = queues.get(&user) {
            match tx.send(job) {
                Ok(()) => return,
                Err(mpsc::error::SendError(j)) => job = j,
            }
        }
        let (tx, rx) = mpsc::unbounded_channel();
        tx.send(job).ok();
        queues.insert(user.clone(), tx);
        tokio::spawn(worker(Arc::downgrade(&app.0), user, rx));
    }
}

async fn worker(app: Weak<App>, user: String, mut rx: mpsc::UnboundedReceiver<Job>) {
    loop {
        let job = match tokio::time::timeout(WORKER_IDLE, rx.recv()).await {
            Ok(Some(job)) => job,
            Ok(None) => return,
            Err(_) => {
                let Some(app) = app.upgrade() else { return };
                let mut queues = app.checks.queues.lock().unwrap_or_else(|e| e.into_inner());
                if rx.is_empty() {
                    queues.remove(&user);
                    return;
                }
                continue;
            }
        };
        let Some(app) = app.upgrade() else { return };
        let request_id = job.request.request_id.clone().unwrap_or_default();
        let outcome = run_check(&app, &job.principal, &job.request).await;
        if let Err(e) = &outcome {
            tracing::info!(request = %request_id, code = %e.body.code, "check failed");
        }
        let record = CheckRecord::from_outcome(outcome);
        app.checks.store(&user, &request_id, record.clone());
        let message = StreamMessage {
            kind: MessageType::CheckResult,
            request_id: Some(request_id),
            payload: serde_json::to_value(&record).expect("records serialize"),
        };
        app.hub.send(&user, &message);
        if let Some(reply) = job.reply {
            reply.send(record).ok();
        }
    }
}
