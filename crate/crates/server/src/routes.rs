//! HTTP and websocket handlers under `/v1`.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::ws::rejection::WebSocketUpgradeRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use proofbench_core::history::{to_ndjson, ExportFilter, SubmissionDiff};
use proofbench_core::syntax::{complete, lookup_symbol, tokenize, SourceSpan, TokenKind};
use proofbench_core::tutorial::{load_tutorial, reset_progress, BlockBody, Course, Outcome, Tutorial, TutorialError};
use proofbench_core::{Locale, Role};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::oneshot;

use crate::app::AppState;
use crate::auth::{user_id, AuthError, Principal};
use crate::check::{load_state, CheckRecord, CheckRequest};
use crate::content::ContentError;
use crate::error::ApiError;
use crate::hub::StreamMessage;
use crate::rbac::Endpoint;

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    let v1 = Router::new()
        .route("/health", get(health))
        .route("/me", get(me))
        .route("/courses", get(list_courses).post(create_course))
        .route("/courses/{id}", get(get_course).put(update_course))
        .route("/courses/{id}/enroll", post(enroll))
        .route("/tutorials", post(upload_tutorial))
        .route("/tutorials/{id}", get(get_tutorial))
        .route("/checks", post(submit_check))
        .route("/checks/{id}", get(get_check))
        .route("/progress/{id}/reset", post(reset))
        .route("/rules", get(list_rules))
        .route("/symbols", get(list_symbols))
        .route("/tokenize", post(tokenize_doc))
        .route("/complete", post(complete_doc))
        .route("/admin/pool", get(pool_status))
        .route("/admin/pool/scale", post(pool_scale))
        .route("/admin/users", get(list_users))
        .route("/admin/users/{id}", delete(delete_user))
        .route("/export", get(export))
        .route("/stream", get(stream));
    Router::new().nest("/v1", v1).with_state(state)
}

/// The authenticated caller, if a token was presented.
pub struct Caller(pub Option<Principal>);

impl Caller {
    /// The principal, if its role admits `endpoint`.
    pub fn require(self, endpoint: Endpoint) -> ApiResult<Principal> {
        match self.0 {
            None if endpoint.allows(None) => Err(ApiError::internal("anonymous endpoint asked for a principal")),
            None => Err(ApiError::unauthenticated()),
            Some(p) if endpoint.allows(Some(p.role())) => Ok(p),
            Some(_) => {
                Err(ApiError::forbidden(format!("role does not permit {} {}", endpoint.route().0, endpoint.route().1)))
            }
        }
    }
}

fn bearer(parts: &Parts) -> Result<Option<String>, AuthError> {
    if let Some(value) = parts.headers.get(header::AUTHORIZATION) {
        let value = value.to_str().map_err(|_| AuthError::Malformed)?;
        let token = value.strip_prefix("Bearer ").ok_or(AuthError::Malformed)?;
        return Ok(Some(token.trim().to_string()));
    }
    // Browsers cannot set headers on websocket upgrades.
    let query = parts.uri.query().unwrap_or("");
    Ok(query
        .split('&')
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == "access_token")
        .map(|(_, v)| v.to_string()))
}

impl FromRequestParts<AppState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let Some(token) = bearer(parts)? else { return Ok(Caller(None)) };
        let principal = state.verifier.verify(&token)?;
        state.register(&principal)?;
        Ok(Caller(Some(principal)))
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid("invalid-body", e.to_string()))
}

async fn health(State(app): State<AppState>) -> Json<Value> {
    let status = app.pool.status();
    Json(json!({
        "status": if status.healthy() == 0 { "unavailable" } else if status.degraded { "degraded" } else { "ok" },
        "instances": status.instances.len(),
        "healthy": status.healthy(),
    }))
}

async fn me(caller: Caller) -> ApiResult<Json<Value>> {
    let p = caller.require(Endpoint::Me)?;
    Ok(Json(json!({ "user_id": p.user_id, "username": p.username, "role": p.role(), "roles": p.roles })))
}

// ---- courses ----

#[derive(Debug, Clone, Serialize)]
pub struct CourseView {
    pub id: String,
    pub title: BTreeMap<Locale, String>,
    pub locales: BTreeSet<Locale>,
    pub profile: String,
    pub tutorials: Vec<String>,
    pub owner: String,
    pub roster_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roster: Option<Vec<String>>,
}

impl CourseView {
    fn of(course: &Course, managed: bool) -> Self {
        CourseView {
            id: course.id.clone(),
            title: course.title.clone(),
            locales: course.locales.clone(),
            profile: course.profile.clone(),
            tutorials: course.tutorials.clone(),
            owner: course.owner.clone(),
            roster_size: course.roster.len(),
            roster: managed.then(|| course.roster.iter().cloned().collect()),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TitleInput {
    Plain(String),
    Localized(BTreeMap<Locale, String>),
}

impl TitleInput {
    fn into_localized(self) -> BTreeMap<Locale, String> {
        match self {
            TitleInput::Plain(s) => [(Locale::En, s)].into(),
            TitleInput::Localized(m) => m,
        }
    }
}

/// A roster member: an opaque user id or the issuer/subject pair it derives from.
#[derive(Deserialize)]
#[serde(untagged)]
enum RosterEntry {
    Id(String),
    Subject { issuer: String, subject: String },
}

impl RosterEntry {
    fn user_id(&self) -> String {
        match self {
            RosterEntry::Id(id) => id.clone(),
            RosterEntry::Subject { issuer, subject } => user_id(issuer, subject),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewCourse {
    id: Option<String>,
    title: TitleInput,
    #[serde(default)]
    locales: Option<BTreeSet<Locale>>,
    #[serde(default)]
    profile: Option<String>,
    #[serde(default)]
    tutorials: Vec<String>,
    #[serde(default)]
    roster: Vec<RosterEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoursePatch {
    title: Option<TitleInput>,
    locales: Option<BTreeSet<Locale>>,
    profile: Option<String>,
    tutorials: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Enrollment {
    users: Vec<RosterEntry>,
}

fn check_course_refs(app: &AppState, profile: &str, tutorials: &[String]) -> ApiResult<()> {
    if app.content.profile(profile).is_none() {
        return Err(ApiError::invalid("unknown-profile", format!("no profile `{profile}`")));
    }
    if let Some(t) = tutorials.iter().find(|t| app.content.tutorial(t).is_none()) {
        return Err(ApiError::invalid("unknown-tutorial", format!("no tutorial `{t}`")));
    }
    Ok(())
}

fn validated(course: Course) -> ApiResult<Course> {
    course.validate().map_err(|e| ApiError::invalid("invalid-course", e.to_string()))?;
    Ok(course)
}

fn with_pool(view: CourseView, instances: usize) -> Value {
    let mut v = serde_json::to_value(view).expect("course views serialize");
    v["pool_instances"] = instances.into();
    v
}

async fn list_courses(State(app): State<AppState>, caller: Caller) -> ApiResult<Json<Vec<CourseView>>> {
    let p = caller.require(Endpoint::ListCourses)?;
    Ok(Json(
        app.content
            .courses()
            .iter()
            .filter(|c| app.in_course(&p, c))
            .map(|c| CourseView::of(c, app.manages_course(&p, c)))
            .collect(),
    ))
}

async fn create_course(State(app): State<AppState>, caller: Caller, body: Bytes) -> ApiResult<Response> {
    let p = caller.require(Endpoint::CreateCourse)?;
    let req: NewCourse = parse_body(&body)?;
    let profile = req.profile.clone().unwrap_or_else(|| {
        req.tutorials
            .first()
            .and_then(|t| app.content.tutorial(t))
            .map_or_else(|| "default".to_string(), |e| e.tutorial.profile.clone())
    });
    check_course_refs(&app, &profile, &req.tutorials)?;
    let title = req.title.into_localized();
    let course = validated(Course {
        id: req.id.unwrap_or_else(|| format!("c-{}", &uuid::Uuid::new_v4().simple().to_string()[..12])),
        locales: req.locales.unwrap_or_else(|| title.keys().copied().collect()),
        title,
        profile,
        tutorials: req.tutorials,
        roster: req.roster.iter().map(RosterEntry::user_id).collect(),
        owner: p.user_id.clone(),
    })?;
    if !app.content.insert_course(course.clone()) {
        return Err(ApiError::conflict(format!("course `{}` already exists", course.id)));
    }
    let instances = app.resize_pool().await?;
    Ok((StatusCode::CREATED, Json(with_pool(CourseView::of(&course, true), instances))).into_response())
}

fn course_for(app: &AppState, p: &Principal, id: &str) -> ApiResult<Course> {
    let course = app.content.course(id).ok_or_else(|| ApiError::not_found("course", id))?;
    if !app.in_course(p, &course) {
        return Err(ApiError::not_found("course", id));
    }
    Ok(course)
}

fn managed_course(app: &AppState, p: &Principal, id: &str) -> ApiResult<Course> {
    let course = course_for(app, p, id)?;
    if !app.manages_course(p, &course) {
        return Err(ApiError::forbidden("only the course owner may change it"));
    }
    Ok(course)
}

async fn get_course(
    State(app): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<CourseView>> {
    let p = caller.require(Endpoint::GetCourse)?;
    let course = course_for(&app, &p, &id)?;
    Ok(Json(CourseView::of(&course, app.manages_course(&p, &course))))
}

async fn update_course(
    State(app): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<CourseView>> {
    let p = caller.require(Endpoint::UpdateCourse)?;
    let patch: CoursePatch = parse_body(&body)?;
    let mut course = managed_course(&app, &p, &id)?;
    if let Some(t) = patch.title {
        course.title = t.into_localized();
    }
    if let Some(l) = patch.locales {
        course.locales = l;
    }
    if let Some(pr) = patch.profile {
        course.profile = pr;
    }
    if let Some(ts) = patch.tutorials {
        course.tutorials = ts;
    }
    check_course_refs(&app, &course.profile, &course.tutorials)?;
    let course = validated(course)?;
    let updated = course.clone();
    app.content.update_course(&id, move |c| *c = updated).ok_or_else(|| ApiError::not_found("course", &id))?;
    Ok(Json(CourseView::of(&course, true)))
}

async fn enroll(
    State(app): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let p = caller.require(Endpoint::EnrollCourse)?;
    let req: Enrollment = parse_body(&body)?;
    managed_course(&app, &p, &id)?;
    let ids: Vec<String> = req.users.iter().map(RosterEntry::user_id).collect();
    let course = app
        .content
        .update_course(&id, |c| {
            c.roster.extend(ids);
            c.clone()
        })
        .ok_or_else(|| ApiError::not_found("course", &id))?;
    let instances = app.resize_pool().await?;
    Ok(Json(with_pool(CourseView::of(&course, true), instances)))
}

// ---- tutorials ----

#[derive(Debug, Serialize)]
struct BlockView {
    id: String,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    content: Option<BTreeMap<Locale, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    current: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outcome: Option<Outcome>,
}

#[derive(Debug, Serialize)]
struct SectionView {
    title: BTreeMap<Locale, String>,
    blocks: Vec<BlockView>,
}

fn tutorial_view(
    t: &Tutorial,
    contents: &BTreeMap<String, String>,
    outcomes: &BTreeMap<String, Outcome>,
    staff: bool,
) -> Value {
    let sections: Vec<SectionView> = t
        .sections
        .iter()
        .map(|s| SectionView {
            title: s.title.clone(),
            blocks: s
                .blocks
                .iter()
                .filter_map(|b| {
                    let mut v = BlockView {
                        id: b.id.clone(),
                        kind: "text",
                        content: None,
                        code: None,
                        initial: None,
                        current: None,
                        outcome: None,
                    };
                    match &b.body {
                        BlockBody::Text { content } => v.content = Some(content.clone()),
                        BlockBody::Example { code } => {
                            v.kind = "example";
                            v.code = Some(code.clone());
                        }
                        BlockBody::Hidden { code } => {
                            if !staff {
                                return None;
                            }
                            v.kind = "hidden";
                            v.code = Some(code.clone());
                        }
                        BlockBody::Task { initial } => {
                            v.kind = "task";
                            v.initial = Some(initial.clone());
                            v.current = contents.get(&b.id).cloned();
                            v.outcome = Some(outcomes.get(&b.id).copied().unwrap_or_default());
                        }
                    }
                    Some(v)
                })
                .collect(),
        })
        .collect();
    json!({
        "id": t.id,
        "title": t.title,
        "profile": t.profile,
        "header": t.header.text(),
        "footer": t.footer,
        "sections": sections,
    })
}

fn may_view_tutorial(app: &AppState, p: &Principal, id: &str, owner: Option<&str>) -> bool {
    if p.is(Role::Admin) {
        return true;
    }
    let courses = app.content.courses_with(id);
    if p.is(Role::Teacher) && (owner.is_none_or(|o| o == p.user_id) || courses.iter().any(|c| c.owner == p.user_id)) {
        return true;
    }
    courses.iter().any(|c| app.in_course(p, c))
}

async fn get_tutorial(State(app): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let p = caller.require(Endpoint::GetTutorial)?;
    let entry = app.content.tutorial(&id).ok_or_else(|| ApiError::not_found("tutorial", &id))?;
    if !may_view_tutorial(&app, &p, &id, entry.owner.as_deref()) {
        return Err(ApiError::not_found("tutorial", &id));
    }
    let state = load_state(&app, &p.user_id, &entry.tutorial)?;
    Ok(Json(tutorial_view(&entry.tutorial, &state.contents, &state.outcomes, p.is(Role::Teacher))))
}

#[derive(Deserialize)]
struct UploadQuery {
    course: Option<String>,
}

async fn upload_tutorial(
    State(app): State<AppState>,
    caller: Caller,
    Query(q): Query<UploadQuery>,
    body: Bytes,
) -> ApiResult<Response> {
    let p = caller.require(Endpoint::UploadTutorial)?;
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::bad_request("tutorial must be UTF-8 text"))?;
    let tutorial = load_tutorial(text).map_err(|e| match &e {
        TutorialError::Format { line, column, message } => ApiError::invalid("invalid-tutorial-format", e.to_string())
            .with_details(json!({ "line": line, "column": column, "message": message })),
        _ => ApiError::invalid("invalid-tutorial-format", e.to_string()),
    })?;
    if let Some(existing) = app.content.tutorial(&tutorial.id) {
        if !p.is(Role::Admin) && existing.owner.as_deref() != Some(p.user_id.as_str()) {
            return Err(ApiError::conflict(format!("tutorial `{}` belongs to someone else", tutorial.id)));
        }
    }
    if let Some(c) = &q.course {
        managed_course(&app, &p, c)?;
    }
    let id = tutorial.id.clone();
    let warnings = app.content.add_tutorial(tutorial, Some(p.user_id.clone())).map_err(|e| match e {
        ContentError::Invalid(msg, diags) => {
            ApiError::invalid("invalid-tutorial", msg).with_details(serde_json::to_value(diags).unwrap_or_default())
        }
        e @ ContentError::UnknownProfile { .. } => ApiError::invalid("unknown-profile", e.to_string()),
        other => ApiError::internal(other.to_string()),
    })?;
    if let Some(c) = &q.course {
        app.content.update_course(c, |course| {
            if !course.tutorials.contains(&id) {
                course.tutorials.push(id.clone());
            }
        });
    }
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "warnings": warnings }))).into_response())
}

// ---- checks ----

#[derive(Deserialize)]
struct CheckQuery {
    #[serde(default)]
    wait: bool,
}

/// Validate and queue a check; the request id is filled in if absent.
fn queue_check(
    app: &AppState,
    p: &Principal,
    mut req: CheckRequest,
    reply: Option<oneshot::Sender<CheckRecord>>,
) -> ApiResult<String> {
    app.resolve_check(p, &req)?;
    let rid = req.request_id.get_or_insert_with(|| uuid::Uuid::new_v4().to_string()).clone();
    if rid.is_empty() || rid.len() > 128 {
        return Err(ApiError::invalid("invalid-request-id", "request ids are 1 to 128 characters"));
    }
    app.checks.enqueue(app, p.clone(), req, reply);
    Ok(rid)
}

fn record_response(record: CheckRecord) -> Response {
    match record {
        CheckRecord::Done { result } => Json(result).into_response(),
        CheckRecord::Failed { status, error } => {
            let code = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (code, Json(json!({ "error": error }))).into_response()
        }
        CheckRecord::Pending => (StatusCode::ACCEPTED, Json(json!({ "state": "pending" }))).into_response(),
    }
}

async fn submit_check(
    State(app): State<AppState>,
    caller: Caller,
    Query(q): Query<CheckQuery>,
    body: Bytes,
) -> ApiResult<Response> {
    let p = caller.require(Endpoint::SubmitCheck)?;
    let req: CheckRequest = parse_body(&body)?;
    if q.wait {
        let (tx, rx) = oneshot::channel();
        queue_check(&app, &p, req, Some(tx))?;
        let record = rx.await.map_err(|_| ApiError::internal("check worker stopped"))?;
        return Ok(record_response(record));
    }
    let rid = queue_check(&app, &p, req, None)?;
    Ok((StatusCode::ACCEPTED, Json(json!({ "request_id": rid, "state": "pending" }))).into_response())
}

async fn get_check(
    State(app): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<CheckRecord>> {
    let p = caller.require(Endpoint::GetCheck)?;
    app.checks.record(&p.user_id, &id).map(Json).ok_or_else(|| ApiError::not_found("check", &id))
}

async fn reset(State(app): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let p = caller.require(Endpoint::ResetProgress)?;
    let entry = app.content.tutorial(&id).ok_or_else(|| ApiError::not_found("tutorial", &id))?;
    if !may_view_tutorial(&app, &p, &id, entry.owner.as_deref()) {
        return Err(ApiError::not_found("tutorial", &id));
    }
    let state = load_state(&app, &p.user_id, &entry.tutorial)?;
    let fresh = reset_progress(&state, &entry.tutorial).map_err(|e| ApiError::internal(e.to_string()))?;
    app.log.store().save_state(&fresh)?;
    Ok(Json(json!({ "tutorial_id": id, "contents": fresh.contents, "outcomes": fresh.outcomes })))
}

// ---- editor support ----

#[derive(Deserialize)]
struct RulesQuery {
    course: Option<String>,
    category: Option<String>,
    q: Option<String>,
}

async fn list_rules(
    State(app): State<AppState>,
    caller: Caller,
    Query(q): Query<RulesQuery>,
) -> ApiResult<Json<Value>> {
    let p = caller.require(Endpoint::ListRules)?;
    let profile_id = match &q.course {
        Some(c) => course_for(&app, &p, c)?.profile,
        None => "default".to_string(),
    };
    let profile = app
        .content
        .profile(&profile_id)
        .ok_or_else(|| ApiError::internal(format!("missing profile `{profile_id}`")))?;
    let allowed = app.rules.list_rules(&profile, q.category.as_deref());
    let rules = match q.q.as_deref() {
        Some(query) => {
            let hits = app.rules.search_rules(query);
            allowed.into_iter().filter(|e| hits.contains(e)).collect()
        }
        None => allowed,
    };
    Ok(Json(json!({ "profile": profile_id, "rules": rules })))
}

#[derive(Deserialize)]
struct SymbolQuery {
    #[serde(default)]
    q: String,
}

async fn list_symbols(caller: Caller, Query(q): Query<SymbolQuery>) -> ApiResult<Json<Value>> {
    caller.require(Endpoint::ListSymbols)?;
    Ok(Json(json!({ "symbols": lookup_symbol(&q.q) })))
}

#[derive(Deserialize)]
struct TokenizeRequest {
    document: String,
}

#[derive(Serialize)]
struct TokenView {
    kind: TokenKind,
    span: SourceSpan,
}

async fn tokenize_doc(caller: Caller, body: Bytes) -> ApiResult<Json<Value>> {
    caller.require(Endpoint::Tokenize)?;
    let req: TokenizeRequest = parse_body(&body)?;
    let tokens: Vec<TokenView> =
        tokenize(&req.document).into_iter().map(|t| TokenView { kind: t.kind, span: t.span }).collect();
    Ok(Json(json!({ "tokens": tokens })))
}

#[derive(Deserialize)]
struct CompleteRequest {
    document: String,
    cursor: usize,
    course_id: Option<String>,
}

async fn complete_doc(State(app): State<AppState>, caller: Caller, body: Bytes) -> ApiResult<Json<Value>> {
    let p = caller.require(Endpoint::Complete)?;
    let req: CompleteRequest = parse_body(&body)?;
    if req.cursor > req.document.len() || !req.document.is_char_boundary(req.cursor) {
        return Err(ApiError::invalid("invalid-cursor", "cursor must be a character boundary inside the document"));
    }
    let profile_id = match &req.course_id {
        Some(c) => course_for(&app, &p, c)?.profile,
        None => "default".to_string(),
    };
    let profile = app
        .content
        .profile(&profile_id)
        .ok_or_else(|| ApiError::internal(format!("missing profile `{profile_id}`")))?;
    let rules = app.rules.list_rules(&profile, None);
    Ok(Json(json!({ "completions": complete(&req.document, req.cursor, &profile, &rules) })))
}

// ---- administration ----

async fn pool_status(State(app): State<AppState>, caller: Caller) -> ApiResult<Json<Value>> {
    caller.require(Endpoint::PoolStatus)?;
    let mut v = serde_json::to_value(app.pool.status()).expect("pool status serializes");
    v["wanted"] = app.wanted_instances().into();
    v["sessions"] = app.sessions.active().await.into();
    Ok(Json(v))
}

#[derive(Deserialize)]
struct ScaleRequest {
    target: usize,
}

async fn pool_scale(State(app): State<AppState>, caller: Caller, body: Bytes) -> ApiResult<Json<Value>> {
    caller.require(Endpoint::PoolScale)?;
    let req: ScaleRequest = parse_body(&body)?;
    let report = app.pool.scale(req.target).await?;
    Ok(Json(json!({ "report": report, "status": app.pool.status() })))
}

async fn list_users(State(app): State<AppState>, caller: Caller) -> ApiResult<Json<Value>> {
    caller.require(Endpoint::ListUsers)?;
    Ok(Json(json!({ "users": app.log.store().profiles()? })))
}

async fn delete_user(State(app): State<AppState>, caller: Caller, Path(id): Path<String>) -> ApiResult<StatusCode> {
    caller.require(Endpoint::DeleteUser)?;
    if app.log.store().profile(&id)?.is_none() {
        return Err(ApiError::not_found("user", &id));
    }
    app.log.delete_user(&id)?;
    app.sessions.release_user(&id).await;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct ExportQuery {
    course: Option<String>,
    tutorial: Option<String>,
    from: Option<String>,
    until: Option<String>,
}

fn parse_time(field: &str, s: Option<&str>) -> ApiResult<Option<DateTime<Utc>>> {
    s.map(|s| {
        DateTime::parse_from_rfc3339(s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| ApiError::bad_request(format!("`{field}`: {e}")))
    })
    .transpose()
}

async fn export(State(app): State<AppState>, caller: Caller, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let p = caller.require(Endpoint::Export)?;
    let filter = ExportFilter {
        course_id: q.course.clone(),
        tutorial_id: q.tutorial.clone(),
        from: parse_time("from", q.from.as_deref())?,
        until: parse_time("until", q.until.as_deref())?,
    };
    let owned: Option<BTreeSet<String>> = if p.is(Role::Admin) {
        None
    } else {
        if let Some(c) = &q.course {
            managed_course(&app, &p, c)?;
        }
        Some(app.content.courses().into_iter().filter(|c| c.owner == p.user_id).map(|c| c.id).collect())
    };
    let records: Vec<SubmissionDiff> = app
        .log
        .export_history(p.role(), &filter)?
        .into_iter()
        .filter(|d| owned.as_ref().is_none_or(|o| o.contains(&d.course_id)))
        .collect();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], to_ndjson(&records)).into_response())
}

// ---- stream ----

#[derive(Deserialize)]
struct Inbound {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    payload: Value,
}

async fn stream(
    State(app): State<AppState>,
    caller: Caller,
    ws: Result<WebSocketUpgrade, WebSocketUpgradeRejection>,
) -> ApiResult<Response> {
    let p = caller.require(Endpoint::Stream)?;
    match ws {
        Ok(ws) => Ok(ws.on_upgrade(move |socket| session(app, p, socket))),
        Err(rejection) => Ok(rejection.into_response()),
    }
}

async fn session(app: AppState, p: Principal, mut socket: WebSocket) {
    let (sub, mut rx) = app.hub.subscribe(&p.user_id);
    let hello = StreamMessage::notice(None, json!({ "event": "connected", "user_id": p.user_id }));
    if send(&mut socket, &hello).await.is_ok() {
        let mut keepalive = tokio::time::interval(Duration::from_secs(30));
        keepalive.tick().await;
        loop {
            tokio::select! {
                out = rx.recv() => match out {
                    Some(m) => if send(&mut socket, &m).await.is_err() { break },
                    None => break,
                },
                incoming = socket.recv() => match incoming {
                    Some(Ok(Message::Text(text))) => {
                        let reply = inbound(&app, &p, text.as_str());
                        if let Some(m) = reply {
                            if send(&mut socket, &m).await.is_err() { break }
                        }
                    }
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => {}
                },
                _ = keepalive.tick() => {
                    if socket.send(Message::Ping(Bytes::new())).await.is_err() { break }
                }
            }
        }
    }
    app.hub.unsubscribe(&p.user_id, sub);
}

async fn send(socket: &mut WebSocket, m: &StreamMessage) -> Result<(), axum::Error> {
    let text = serde_json::to_string(m).expect("stream messages serialize");
    socket.send(Message::Text(text.into())).await
}

/// Handle one client frame; results of queued checks arrive through the hub.
fn inbound(app: &AppState, p: &Principal, text: &str) -> Option<StreamMessage> {
    let frame: Inbound = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(e) => {
            return Some(StreamMessage::notice(
                None,
                json!({ "event": "error", "code": "invalid-frame", "message": e.to_string() }),
            ))
        }
    };
    match frame.kind.as_str() {
        "ping" => Some(StreamMessage::notice(None, json!({ "event": "pong" }))),
        "check" => {
            let req: CheckRequest = match serde_json::from_value(frame.payload) {
                Ok(r) => r,
                Err(e) => {
                    return Some(StreamMessage::notice(
                        None,
                        json!({ "event": "error", "code": "invalid-body", "message": e.to_string() }),
                    ))
                }
            };
            let rid = req.request_id.clone();
            match queue_check(app, p, req, None) {
                Ok(rid) => Some(StreamMessage::notice(Some(rid), json!({ "event": "queued" }))),
                Err(e) => Some(StreamMessage::notice(
                    rid,
                    json!({ "event": "error", "status": e.status.as_u16(), "error": e.body }),
                )),
            }
        }
        other => Some(StreamMessage::notice(
            None,
            json!({ "event": "error", "code": "unknown-frame", "message": format!("unknown frame type `{other}`") }),
        )),
    }
}
