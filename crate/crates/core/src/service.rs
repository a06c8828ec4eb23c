//! HTTP facade over the engine for the web UI and scripts.
//!
//! All assessments live in memory; files move in and out through the
//! `save` and `import` endpoints. Mutations carry an `expected_revision` and
//! are rejected with 409 when it is stale. Mutations on one assessment are
//! applied one at a time; reads see the latest committed revision.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/catalog?level=medium\|high` | level-filtered catalog |
//! | GET | `/api/assessments` | summaries |
//! | POST | `/api/assessments` | create `{level, organization, threshold}` |
//! | POST | `/api/assessments/import` | load an assessment file |
//! | GET | `/api/assessments/{id}` | full assessment |
//! | PATCH | `/api/assessments/{id}/responses/{requirement}` | record a response |
//! | PUT | `/api/assessments/{id}/odp/{requirement}/{ordinal}` | assign a parameter |
//! | PUT | `/api/assessments/{id}/methods/{requirement}` | set a method matrix |
//! | POST | `/api/assessments/{id}/complete` | mark completed |
//! | POST | `/api/assessments/{id}/save` | assessment file bytes |
//! | GET | `/api/assessments/{id}/score` | scores and display strings |
//! | GET | `/api/assessments/{id}/effects` | adversary effects rows |
//! | GET | `/api/assessments/{id}/snapshot` | snapshot document |
//! | GET | `/api/assessments/{id}/radar.svg` | radar chart |
//! | GET | `/api/assessments/{id}/compliance.csv` | compliance table |

use std::collections::HashMap;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, Method as HttpMethod, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, patch, post, put};
use axum::{Json, Router};
use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

use crate::assessment::{
    Assessment, AssessmentError, Completion, MethodMatrix, ResponseEntry, Satisfaction,
    DEFAULT_THRESHOLD,
};
use crate::catalog::{select_level, Catalog, CatalogView, HipaaType, RequirementId, SecurityLevel};
use crate::effects::{effects_map, EffectsError, EffectsRow, PartialPolicy};
use crate::report::{
    compliance_summary, compliance_table, radar_svg, render_effects, snapshot, ComplianceSummary,
    EffectsDoc, RadarSpec, SnapshotDoc,
};
use crate::scoring::{overall_compliance, OverallScore, ScoringOptions};

pub const DEFAULT_PORT: u16 = 8642;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: IpAddr,
    pub port: u16,
    /// Enables CORS for this origin. CORS is off when unset.
    pub allow_origin: Option<String>,
    /// Directory holding the built web UI. A placeholder page is served
    /// at `/` when unset.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            allow_origin: None,
            static_dir: None,
        }
    }
}

/// The loaded catalog plus every in-memory assessment.
pub struct SessionStore {
    catalog_path: Option<String>,
    medium: CatalogView,
    high: CatalogView,
    catalog: Catalog,
    assessments: RwLock<HashMap<String, Arc<Mutex<Assessment>>>>,
}

impl SessionStore {
    pub fn new(catalog: Catalog, catalog_path: Option<String>) -> Self {
        Self {
            catalog_path,
            medium: select_level(&catalog, SecurityLevel::Medium),
            high: select_level(&catalog, SecurityLevel::High),
            catalog,
            assessments: RwLock::new(HashMap::new()),
        }
    }

    pub fn view(&self, level: SecurityLevel) -> &CatalogView {
        match level {
            SecurityLevel::Medium => &self.medium,
            SecurityLevel::High => &self.high,
        }
    }

    fn insert(&self, a: Assessment) -> String {
        let id = uuid::Uuid::new_v4().to_string();
        self.assessments
            .write()
            .expect("store lock")
            .insert(id.clone(), Arc::new(Mutex::new(a)));
        id
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Assessment>>, ApiError> {
        self.assessments
            .read()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no assessment {id}")))
    }

    /// Latest committed copy of an assessment.
    pub fn get(&self, id: &str) -> Option<Assessment> {
        self.entry(id)
            .ok()
            .map(|e| e.lock().expect("assessment lock").clone())
    }

    /// Applies `f` to a copy of the assessment under its lock and commits
    /// the copy only if `f` succeeds and the revision check passed.
    fn mutate<F>(&self, id: &str, expected_revision: u64, f: F) -> Result<u64, ApiError>
    where
        F: FnOnce(&mut Assessment, &CatalogView) -> Result<u64, AssessmentError>,
    {
        let entry = self.entry(id)?;
        let mut guard = entry.lock().expect("assessment lock");
        if guard.revision != expected_revision {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "revision_conflict",
                format!(
                    "expected revision {expected_revision}, current revision is {}",
                    guard.revision
                ),
            ));
        }
        let mut next = guard.clone();
        let view = self.view(next.level);
        let revision = f(&mut next, view).map_err(ApiError::from)?;
        *guard = next;
        Ok(revision)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", message)
    }
}

impl From<AssessmentError> for ApiError {
    fn from(e: AssessmentError) -> Self {
        match e {
            AssessmentError::UnknownRequirement(_) | AssessmentError::UnknownSlot { .. } => {
                ApiError::not_found(e.to_string())
            }
            AssessmentError::DigestMismatch { .. } | AssessmentError::Incomparable => {
                ApiError::new(StatusCode::CONFLICT, "catalog_mismatch", e.to_string())
            }
            _ => ApiError::invalid(e.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(r.status(), "invalid", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({ "error": self.message, "kind": self.kind })),
        )
            .into_response()
    }
}

type Shared = Arc<SessionStore>;

#[derive(Deserialize)]
struct CatalogQuery {
    level: Option<SecurityLevel>,
}

async fn get_catalog(
    State(store): State<Shared>,
    Query(q): Query<CatalogQuery>,
) -> Json<CatalogView> {
    Json(store.view(q.level.unwrap_or(SecurityLevel::High)).clone())
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

#[derive(Deserialize)]
struct CreateBody {
    level: SecurityLevel,
    organization: String,
    #[serde(default = "default_threshold")]
    threshold: f64,
}

#[derive(Serialize)]
struct Created {
    assessment_id: String,
    revision: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

async fn create_assessment(
    State(store): State<Shared>,
    body: Result<Json<CreateBody>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let Json(body) = body?;
    let mut a = Assessment::new(store.view(body.level), body.organization, body.threshold)?;
    a.catalog_ref.path = store.catalog_path.clone();
    let id = store.insert(a);
    Ok((
        StatusCode::CREATED,
        Json(Created {
            assessment_id: id,
            revision: 0,
            warnings: Vec::new(),
        }),
    ))
}

#[derive(Serialize)]
struct Summary {
    assessment_id: String,
    organization: String,
    level: SecurityLevel,
    revision: u64,
}

async fn list_assessments(State(store): State<Shared>) -> Json<Vec<Summary>> {
    let map = store.assessments.read().expect("store lock");
    let mut out: Vec<Summary> = map
        .iter()
        .map(|(id, a)| {
            let a = a.lock().expect("assessment lock");
            Summary {
                assessment_id: id.clone(),
                organization: a.organization.clone(),
                level: a.level,
                revision: a.revision,
            }
        })
        .collect();
    out.sort_by(|x, y| x.assessment_id.cmp(&y.assessment_id));
    Json(out)
}

#[derive(Deserialize)]
struct ImportQuery {
    #[serde(default)]
    allow_mismatch: bool,
}

async fn import_assessment(
    State(store): State<Shared>,
    Query(q): Query<ImportQuery>,
    body: String,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let (a, _, warnings) = Assessment::load(&body, &store.catalog, q.allow_mismatch)?;
    let revision = a.revision;
    let id = store.insert(a);
    Ok((
        StatusCode::CREATED,
        Json(Created {
            assessment_id: id,
            revision,
            warnings: warnings.iter().map(ToString::to_string).collect(),
        }),
    ))
}

async fn get_assessment(
    State(store): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<Assessment>, ApiError> {
    Ok(Json(
        store.entry(&id)?.lock().expect("assessment lock").clone(),
    ))
}

async fn save_assessment(
    State(store): State<Shared>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let a = store
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("no assessment {id}")))?;
    Ok((
        [(header::CONTENT_TYPE, "application/json; charset=utf-8")],
        a.to_json(),
    )
        .into_response())
}

#[derive(Serialize)]
struct RevisionBody {
    revision: u64,
}

/// Same fields as the `answer` command.
#[derive(Deserialize)]
struct ResponsePatch {
    satisfaction: String,
    #[serde(default)]
    partial_value: Option<f64>,
    #[serde(default)]
    satisfying_statement: String,
    #[serde(default)]
    names: Vec<String>,
    #[serde(default)]
    validation_tools: Vec<String>,
    #[serde(default)]
    hipaa_types: Vec<String>,
    #[serde(default)]
    recorded_by: String,
    expected_revision: u64,
}

impl ResponsePatch {
    fn into_entry(self) -> Result<ResponseEntry, ApiError> {
        let (satisfaction, shortcut) =
            Satisfaction::parse_with_shortcut(&self.satisfaction).map_err(ApiError::invalid)?;
        let partial_value = match (self.partial_value, shortcut) {
            (Some(v), _) => Some(v),
            (None, s) => s,
        };
        let hipaa_types = self
            .hipaa_types
            .iter()
            .map(|h| h.parse::<HipaaType>())
            .collect::<Result<_, _>>()
            .map_err(ApiError::invalid)?;
        let entry = ResponseEntry {
            satisfaction,
            partial_value,
            satisfying_statement: self.satisfying_statement,
            names: self.names,
            validation_tools: self.validation_tools,
            hipaa_types,
            recorded_at: Utc::now(),
            recorded_by: self.recorded_by,
        };
        entry.check()?;
        Ok(entry)
    }
}

fn requirement_id(s: &str) -> Result<RequirementId, ApiError> {
    s.parse()
        .map_err(|_| ApiError::not_found(format!("no requirement {s}")))
}

async fn patch_response(
    State(store): State<Shared>,
    Path((id, req)): Path<(String, String)>,
    body: Result<Json<ResponsePatch>, JsonRejection>,
) -> Result<Json<RevisionBody>, ApiError> {
    store.entry(&id)?;
    let Json(body) = body?;
    let expected = body.expected_revision;
    let entry = body.into_entry()?;
    let req = requirement_id(&req)?;
    let revision = store.mutate(&id, expected, |a, view| {
        a.record_response(view, &req, entry)
    })?;
    Ok(Json(RevisionBody { revision }))
}

#[derive(Deserialize)]
struct OdpBody {
    value: String,
    expected_revision: u64,
}

async fn put_odp(
    State(store): State<Shared>,
    Path((id, req, ordinal)): Path<(String, String, u32)>,
    body: Result<Json<OdpBody>, JsonRejection>,
) -> Result<Json<RevisionBody>, ApiError> {
    store.entry(&id)?;
    let Json(body) = body?;
    let req = requirement_id(&req)?;
    let revision = store.mutate(&id, body.expected_revision, |a, view| {
        a.assign_odp(view, &req, ordinal, body.value)
    })?;
    Ok(Json(RevisionBody { revision }))
}

#[derive(Deserialize)]
struct MethodsBody {
    #[serde(flatten)]
    matrix: MethodMatrix,
    expected_revision: u64,
}

async fn put_methods(
    State(store): State<Shared>,
    Path((id, req)): Path<(String, String)>,
    body: Result<Json<MethodsBody>, JsonRejection>,
) -> Result<Json<RevisionBody>, ApiError> {
    store.entry(&id)?;
    let Json(body) = body?;
    let req = requirement_id(&req)?;
    let revision = store.mutate(&id, body.expected_revision, |a, view| {
        a.set_method_matrix(view, &req, body.matrix)
    })?;
    Ok(Json(RevisionBody { revision }))
}

#[derive(Deserialize)]
struct CompleteBody {
    #[serde(default)]
    completed_on: Option<NaiveDate>,
    expected_revision: u64,
}

async fn complete_assessment(
    State(store): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<CompleteBody>, JsonRejection>,
) -> Result<Json<RevisionBody>, ApiError> {
    store.entry(&id)?;
    let Json(body) = body?;
    let on = body.completed_on.unwrap_or_else(|| Utc::now().date_naive());
    let revision = store.mutate(&id, body.expected_revision, |a, _| a.complete(on))?;
    Ok(Json(RevisionBody { revision }))
}

#[derive(Deserialize, Default)]
struct ScoreQuery {
    #[serde(default)]
    exclude_not_applicable: bool,
    #[serde(default)]
    family_threshold: Option<f64>,
    #[serde(default)]
    strict_partial: bool,
}

impl ScoreQuery {
    fn options(&self) -> Result<ScoringOptions, ApiError> {
        let opts = ScoringOptions {
            exclude_not_applicable: self.exclude_not_applicable,
            family_threshold: None,
        };
        match self.family_threshold {
            Some(t) => opts
                .with_family_threshold(t)
                .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid", e.to_string())),
            None => Ok(opts),
        }
    }
}

#[derive(Serialize)]
struct ScoreDoc {
    revision: u64,
    completion: Completion,
    completion_percent: String,
    score: OverallScore,
    summary: ComplianceSummary,
}

fn scored(
    store: &SessionStore,
    id: &str,
    q: &ScoreQuery,
) -> Result<(Assessment, OverallScore), ApiError> {
    let a = store
        .get(id)
        .ok_or_else(|| ApiError::not_found(format!("no assessment {id}")))?;
    let score = overall_compliance(store.view(a.level), &a, &q.options()?);
    Ok((a, score))
}

async fn get_score(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ScoreQuery>,
) -> Result<Json<ScoreDoc>, ApiError> {
    let (a, score) = scored(&store, &id, &q)?;
    let completion = a.completion(store.view(a.level));
    Ok(Json(ScoreDoc {
        revision: a.revision,
        completion,
        completion_percent: format!("{}%", crate::report::percent1(completion.fraction)),
        summary: compliance_summary(&score),
        score,
    }))
}

#[derive(Serialize)]
struct EffectsBody {
    revision: u64,
    rows: Vec<EffectsRow>,
    doc: EffectsDoc,
}

async fn get_effects(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ScoreQuery>,
) -> Result<Json<EffectsBody>, ApiError> {
    let a = store
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("no assessment {id}")))?;
    let policy = if q.strict_partial {
        PartialPolicy::Strict
    } else {
        PartialPolicy::Achieved
    };
    let rows = effects_map(&a, store.view(a.level), policy).map_err(|e: EffectsError| {
        ApiError::new(StatusCode::CONFLICT, "enhanced_only", e.to_string())
    })?;
    let doc = render_effects(&rows).doc;
    Ok(Json(EffectsBody {
        revision: a.revision,
        rows,
        doc,
    }))
}

async fn get_snapshot(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ScoreQuery>,
) -> Result<Json<SnapshotDoc>, ApiError> {
    let a = store
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("no assessment {id}")))?;
    Ok(Json(snapshot(store.view(a.level), &a, &q.options()?)))
}

async fn get_radar(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ScoreQuery>,
) -> Result<Response, ApiError> {
    let (_, score) = scored(&store, &id, &q)?;
    let svg = radar_svg(&RadarSpec::from_score(&score))
        .map_err(|e| ApiError::new(StatusCode::CONFLICT, "radar", e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

async fn get_compliance_csv(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ScoreQuery>,
) -> Result<Response, ApiError> {
    let (_, score) = scored(&store, &id, &q)?;
    Ok((
        [(header::CONTENT_TYPE, "text/csv; charset=utf-8")],
        compliance_table(&score),
    )
        .into_response())
}

const PLACEHOLDER_INDEX: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>cuiassess</title></head>
<body><h1>cuiassess service</h1>
<p>The web UI is not bundled with this build. Start the service with
<code>--static-dir</code> pointing at the built UI, or use the JSON API under
<code>/api</code>.</p></body></html>
";

async fn placeholder_index() -> Html<&'static str> {
    Html(PLACEHOLDER_INDEX)
}

/// Builds the full router over a store.
pub fn router(store: Shared, config: &ServiceConfig) -> Router {
    let api = Router::new()
        .route("/api/catalog", get(get_catalog))
        .route(
            "/api/assessments",
            get(list_assessments).post(create_assessment),
        )
        .route("/api/assessments/import", post(import_assessment))
        .route("/api/assessments/{id}", get(get_assessment))
        .route("/api/assessments/{id}/save", post(save_assessment))
        .route(
            "/api/assessments/{id}/responses/{requirement}",
            patch(patch_response),
        )
        .route(
            "/api/assessments/{id}/odp/{requirement}/{ordinal}",
            put(put_odp),
        )
        .route(
            "/api/assessments/{id}/methods/{requirement}",
            put(put_methods),
        )
        .route("/api/assessments/{id}/complete", post(complete_assessment))
        .route("/api/assessments/{id}/score", get(get_score))
        .route("/api/assessments/{id}/effects", get(get_effects))
        .route("/api/assessments/{id}/snapshot", get(get_snapshot))
        .route("/api/assessments/{id}/radar.svg", get(get_radar))
        .route(
            "/api/assessments/{id}/compliance.csv",
            get(get_compliance_csv),
        )
        .with_state(store);

    let app = match &config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(placeholder_index)),
    };

    match config
        .allow_origin
        .as_deref()
        .and_then(|o| HeaderValue::from_str(o).ok())
    {
        Some(origin) => app.layer(
            CorsLayer::new()
                .allow_origin(origin)
                .allow_methods([
                    HttpMethod::GET,
                    HttpMethod::POST,
                    HttpMethod::PUT,
                    HttpMethod::PATCH,
                ])
                .allow_headers(Any),
        ),
        None => app,
    }
}

/// Binds and serves until Ctrl-C.
pub async fn serve(store: SessionStore, config: ServiceConfig) -> std::io::Result<()> {
    let addr = SocketAddr::new(config.bind, config.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let app = router(Arc::new(store), &config);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
