use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use gos_core::analysis::{
    palette_layout, popularity_matrix, PaletteLayout, PaletteOptions, PopularityMatrix,
};
use gos_core::annotation::{
    agreement_matrix, build_prior_field, import_annotations, AnnotationSet, RejectedRow,
    SemanticGroup, DEFAULT_EPSILON,
};
use gos_core::graph::{GraphDocument, OpinionGraph, OpinionId, SurveyConfig};
use gos_core::inference::{infer, name_groups, GroupNames, InferenceConfig, Partition};
use gos_core::seeds::initial_opinions;
use gos_core::simulator::posting_rate;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

use crate::config::ServiceConfig;
use crate::error::ApiError;
use crate::events::{ClusterRun, EventKind};
use crate::store::{Store, StoreError, SurveyState};

type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone, Debug)]
struct Session {
    survey: String,
    menu: Vec<OpinionId>,
    /// Opinions created after the session opened are never offered.
    pool_limit: usize,
    max_menu: usize,
    expires_at: Instant,
    consumed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Running,
    Succeeded,
    Failed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub survey_id: String,
    pub status: JobStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_groups: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

struct Shared {
    config: ServiceConfig,
    store: Mutex<Store>,
    sessions: Mutex<HashMap<String, Session>>,
    jobs: Mutex<HashMap<String, Job>>,
}

/// Handle to the service state; cheap to clone.
#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn token() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

impl AppState {
    /// Opens the event store under `config.data_dir` and replays it.
    pub fn open(config: ServiceConfig) -> Result<AppState, StoreError> {
        let store = Store::open(&config.data_dir, config.snapshot_every)?;
        tracing::info!(
            "loaded {} surveys at event {} from {}",
            store.surveys().len(),
            store.seq(),
            config.data_dir.display()
        );
        Ok(AppState {
            shared: Arc::new(Shared {
                config,
                store: Mutex::new(store),
                sessions: Mutex::new(HashMap::new()),
                jobs: Mutex::new(HashMap::new()),
            }),
        })
    }

    /// Copy of every survey's state, for comparisons and inspection.
    pub fn surveys(&self) -> std::collections::BTreeMap<String, SurveyState> {
        lock(&self.shared.store).surveys().clone()
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.shared.config
    }

    fn store(&self) -> MutexGuard<'_, Store> {
        lock(&self.shared.store)
    }
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/surveys", post(create_survey))
        .route("/surveys/{id}", get(survey_stats))
        .route("/surveys/{id}/sessions", post(open_session))
        .route("/surveys/{id}/export", get(export))
        .route("/surveys/{id}/annotations", post(import))
        .route("/surveys/{id}/cluster", post(cluster))
        .route("/surveys/{id}/analysis/popularity", get(popularity))
        .route("/surveys/{id}/analysis/palette", get(palette))
        .route("/surveys/{id}/analysis/agreement", get(agreement))
        .route("/sessions/{id}/menu", get(menu))
        .route("/sessions/{id}/response", post(respond))
        .route("/jobs/{id}", get(job));
    let api = match &state.shared.config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    api.layer(TraceLayer::new_for_http()).with_state(state)
}

fn check_admin(headers: &HeaderMap, survey: &SurveyState) -> ApiResult<()> {
    let given = headers
        .get("x-admin-token")
        .and_then(|v| v.to_str().ok())
        .or_else(|| {
            headers
                .get("authorization")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.strip_prefix("Bearer "))
        });
    if given == Some(survey.admin_token.as_str()) {
        Ok(())
    } else {
        Err(ApiError::unauthorized())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct CreateSurvey {
    pub name: Option<String>,
    /// Defaults to the twelve built-in seed opinions.
    pub seeds: Option<Vec<String>>,
    pub config: Option<SurveyConfig>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SurveyCreated {
    pub survey_id: String,
    pub admin_token: String,
}

async fn create_survey(
    State(state): State<AppState>,
    body: Option<Json<CreateSurvey>>,
) -> ApiResult<(StatusCode, Json<SurveyCreated>)> {
    let req = body.map(|b| b.0).unwrap_or_default();
    let id = token();
    let admin_token = token();
    let kind = EventKind::Created {
        name: req.name,
        admin_token: admin_token.clone(),
        seeds: req
            .seeds
            .unwrap_or_else(|| initial_opinions().into_iter().map(String::from).collect()),
        config: req.config.unwrap_or_default(),
    };
    state.store().commit(&id, kind)?;
    Ok((
        StatusCode::CREATED,
        Json(SurveyCreated {
            survey_id: id,
            admin_token,
        }),
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SurveyStats {
    pub survey_id: String,
    pub name: Option<String>,
    pub config: SurveyConfig,
    pub opinions: usize,
    pub respondents: usize,
    pub edges: usize,
    pub posting_rate: f64,
    pub annotators: Vec<String>,
    pub annotations: usize,
    pub cluster_runs: usize,
}

async fn survey_stats(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<SurveyStats>> {
    let store = state.store();
    let s = store.survey(&id)?;
    Ok(Json(SurveyStats {
        survey_id: s.id.clone(),
        name: s.name.clone(),
        config: s.graph.config().clone(),
        opinions: s.graph.num_opinions(),
        respondents: s.graph.num_respondents(),
        edges: s.graph.num_edges(),
        posting_rate: posting_rate(&s.graph),
        annotators: s.annotations.annotators().to_vec(),
        annotations: s.annotations.len(),
        cluster_runs: s.runs.len(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MenuItem {
    pub id: OpinionId,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MenuView {
    pub session_id: String,
    pub survey_id: String,
    pub menu: Vec<MenuItem>,
    pub max_menu: usize,
    /// How many more opinions may still be requested.
    pub remaining: usize,
    pub expires_in_secs: u64,
}

fn menu_view(id: &str, session: &Session, graph: &OpinionGraph) -> MenuView {
    MenuView {
        session_id: id.to_string(),
        survey_id: session.survey.clone(),
        menu: session
            .menu
            .iter()
            .map(|o| MenuItem {
                id: o.clone(),
                text: graph.opinion(o).map(|x| x.text.clone()).unwrap_or_default(),
            })
            .collect(),
        max_menu: session.max_menu,
        remaining: session.max_menu.saturating_sub(session.menu.len()),
        expires_in_secs: session
            .expires_at
            .saturating_duration_since(Instant::now())
            .as_secs(),
    }
}

async fn open_session(
    State(state): State<AppState>,
    Path(survey): Path<String>,
) -> ApiResult<(StatusCode, Json<MenuView>)> {
    let ttl = Duration::from_secs(state.shared.config.session_ttl_secs);
    let store = state.store();
    let s = store.survey(&survey)?;
    let config = s.graph.config();
    let menu = s
        .graph
        .sample_menu_with(&mut rand::rng(), config.min_menu, &[]);
    let session = Session {
        survey: survey.clone(),
        menu,
        pool_limit: s.graph.num_opinions(),
        max_menu: config.max_menu,
        expires_at: Instant::now() + ttl,
        consumed: false,
    };
    let id = token();
    let view = menu_view(&id, &session, &s.graph);
    let mut sessions = lock(&state.shared.sessions);
    let now = Instant::now();
    // Forget sessions that have been closed for longer than one TTL.
    sessions.retain(|_, x| x.expires_at + ttl > now);
    sessions.insert(id, session);
    Ok((StatusCode::CREATED, Json(view)))
}

fn live_session<'a>(
    sessions: &'a mut HashMap<String, Session>,
    id: &str,
) -> ApiResult<&'a mut Session> {
    let session = sessions
        .get_mut(id)
        .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))?;
    if session.consumed {
        return Err(ApiError::gone("session already answered"));
    }
    if Instant::now() >= session.expires_at {
        return Err(ApiError::gone("session expired"));
    }
    Ok(session)
}

#[derive(Debug, Deserialize)]
struct ExtendQuery {
    #[serde(default)]
    extend: usize,
}

async fn menu(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExtendQuery>,
) -> ApiResult<Json<MenuView>> {
    let store = state.store();
    let mut sessions = lock(&state.shared.sessions);
    let session = live_session(&mut sessions, &id)?;
    let graph = &store.survey(&session.survey)?.graph;
    let room = session.max_menu.saturating_sub(session.menu.len());
    let want = q.extend.min(room);
    if want > 0 {
        let more =
            graph.draw_uniform_within(&mut rand::rng(), want, session.pool_limit, &session.menu);
        session.menu.extend(more);
    }
    Ok(Json(menu_view(&id, session, graph)))
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ResponseBody {
    pub selected: Vec<OpinionId>,
    pub new_opinions: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResponseAccepted {
    pub respondent_id: String,
    pub new_opinion_ids: Vec<OpinionId>,
}

async fn respond(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<ResponseBody>,
) -> ApiResult<(StatusCode, Json<ResponseAccepted>)> {
    // Lock order: store, then sessions.
    let mut store = state.store();
    let mut sessions = lock(&state.shared.sessions);
    let session = live_session(&mut sessions, &id)?;
    let n_new = body.new_opinions.len();
    store.commit(
        &session.survey,
        EventKind::Response {
            menu: session.menu.clone(),
            selected: body.selected,
            new_opinions: body.new_opinions,
        },
    )?;
    session.consumed = true;
    let graph = &store.survey(&session.survey)?.graph;
    let respondent = graph.respondents().last().expect("just added");
    let new_ids = graph.opinions()[graph.num_opinions() - n_new..]
        .iter()
        .map(|o| o.id.clone())
        .collect();
    Ok((
        StatusCode::CREATED,
        Json(ResponseAccepted {
            respondent_id: respondent.id.0.clone(),
            new_opinion_ids: new_ids,
        }),
    ))
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<GraphDocument>> {
    Ok(Json(state.store().survey(&id)?.graph.to_document()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ImportSummary {
    pub imported: usize,
    pub rejected: Vec<RejectedRow>,
    pub warnings: Vec<String>,
}

async fn import(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<ImportSummary>> {
    let mut store = state.store();
    let s = store.survey(&id)?;
    check_admin(&headers, s)?;
    let imp = import_annotations(&body[..], Some(&s.graph))?;
    let entries: Vec<_> = imp.set.entries().collect();
    let imported = entries.len();
    if imported > 0 {
        store.commit(&id, EventKind::AnnotationImport { entries })?;
    }
    Ok(Json(ImportSummary {
        imported,
        rejected: imp.rejected,
        warnings: imp.warnings,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct ClusterRequest {
    pub config: InferenceConfig,
    pub use_annotations: bool,
    pub epsilon: f64,
}

impl Default for ClusterRequest {
    fn default() -> Self {
        ClusterRequest {
            config: InferenceConfig::default(),
            use_annotations: true,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

async fn cluster(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Option<Json<ClusterRequest>>,
) -> ApiResult<(StatusCode, Json<Job>)> {
    let req = body.map(|b| b.0).unwrap_or_default();
    req.config.validate()?;
    let (graph, annotations) = {
        let store = state.store();
        let s = store.survey(&id)?;
        check_admin(&headers, s)?;
        if s.graph.num_edges() == 0 {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "empty_graph",
                "the survey has no responses to cluster",
            ));
        }
        (s.graph.clone(), s.annotations.clone())
    };
    let prior = if req.use_annotations && !annotations.is_empty() {
        Some(build_prior_field(&annotations, &graph, req.epsilon)?)
    } else {
        None
    };

    let job = Job {
        job_id: token(),
        survey_id: id.clone(),
        status: JobStatus::Running,
        error: None,
        run_index: None,
        num_groups: None,
        score: None,
    };
    lock(&state.shared.jobs).insert(job.job_id.clone(), job.clone());

    let worker_state = state.clone();
    let job_id = job.job_id.clone();
    tokio::task::spawn_blocking(move || {
        let outcome = infer(&graph.bipartite(), prior.as_ref(), &req.config)
            .map_err(ApiError::from)
            .and_then(|res| {
                let run = ClusterRun {
                    job_id: job_id.clone(),
                    config: req.config.clone(),
                    used_annotations: prior.is_some(),
                    epsilon: req.epsilon,
                    n_opinions: graph.num_opinions(),
                    n_respondents: graph.num_respondents(),
                    label_space: res.partition.label_space(),
                    labels: res.partition.labels().to_vec(),
                    score: res.score,
                    num_groups: res.partition.num_groups(),
                };
                let mut store = worker_state.store();
                store.commit(&id, EventKind::ClusterRun { run: run.clone() })?;
                let index = store.survey(&id)?.runs.len() - 1;
                Ok((run, index))
            });
        let mut jobs = lock(&worker_state.shared.jobs);
        let job = jobs.get_mut(&job_id).expect("job registered");
        match outcome {
            Ok((run, index)) => {
                job.status = JobStatus::Succeeded;
                job.run_index = Some(index);
                job.num_groups = Some(run.num_groups);
                job.score = Some(run.score);
            }
            Err(e) => {
                tracing::warn!("cluster job {job_id} failed: {}", e.message);
                job.status = JobStatus::Failed;
                job.error = Some(e.message);
            }
        }
    });
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn job(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Job>> {
    lock(&state.shared.jobs)
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("unknown job `{id}`")))
}

/// Graph prefix, partition and names of a completed run.
fn run_view(
    s: &SurveyState,
    run: Option<usize>,
) -> ApiResult<(OpinionGraph, Partition, GroupNames)> {
    let run = match run {
        Some(i) => s
            .runs
            .get(i)
            .ok_or_else(|| ApiError::not_found(format!("no cluster run {i}")))?,
        None => s.runs.last().ok_or_else(|| {
            ApiError::conflict("analytics need a completed cluster run")
        })?,
    };
    let graph = s.graph.prefix(run.n_opinions, run.n_respondents)?;
    let partition = Partition::new(&graph.bipartite(), run.labels.clone(), run.label_space)?;
    let names = name_groups(&graph, &partition, &s.annotations);
    Ok((graph, partition, names))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct PopularityQuery {
    run: Option<usize>,
    pad_to_rows: Option<usize>,
}

async fn popularity(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<PopularityQuery>,
) -> ApiResult<Json<PopularityMatrix>> {
    let store = state.store();
    let (graph, partition, names) = run_view(store.survey(&id)?, q.run)?;
    Ok(Json(popularity_matrix(&graph, &partition, &names, q.pad_to_rows)?))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct PaletteQuery {
    run: Option<usize>,
    /// Comma-separated opinion group indices to leave out.
    exclude: Option<String>,
}

async fn palette(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<PaletteQuery>,
) -> ApiResult<Json<PaletteLayout>> {
    let exclude_groups = match q.exclude.as_deref() {
        None | Some("") => Vec::new(),
        Some(list) => list
            .split(',')
            .map(|x| x.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| {
                ApiError::new(
                    StatusCode::BAD_REQUEST,
                    "malformed",
                    "exclude must be a comma-separated list of group indices",
                )
            })?,
    };
    let store = state.store();
    let (graph, partition, names) = run_view(store.survey(&id)?, q.run)?;
    Ok(Json(palette_layout(
        &graph,
        &partition,
        &names,
        &PaletteOptions { exclude_groups },
    )?))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct AgreementQuery {
    a: Option<String>,
    b: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AgreementDocument {
    pub annotators: [String; 2],
    pub groups: Vec<String>,
    pub matrix: Vec<Vec<u64>>,
}

pub fn agreement_document(
    annotations: &AnnotationSet,
    a: Option<&str>,
    b: Option<&str>,
) -> ApiResult<AgreementDocument> {
    let known = annotations.annotators();
    let pick = |given: Option<&str>, i: usize| -> ApiResult<String> {
        match given {
            Some(x) => Ok(x.to_string()),
            None => known.get(i).cloned().ok_or_else(|| {
                ApiError::conflict("agreement needs two annotators; pass `a` and `b`")
            }),
        }
    };
    let a = pick(a, 0)?;
    let b = pick(b, 1)?;
    let m = agreement_matrix(annotations, &a, &b)?;
    Ok(AgreementDocument {
        annotators: [a, b],
        groups: SemanticGroup::ALL.iter().map(|g| g.code().to_string()).collect(),
        matrix: m.iter().map(|row| row.to_vec()).collect(),
    })
}

async fn agreement(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<AgreementQuery>,
) -> ApiResult<Json<AgreementDocument>> {
    let store = state.store();
    let s = store.survey(&id)?;
    Ok(Json(agreement_document(
        &s.annotations,
        q.a.as_deref(),
        q.b.as_deref(),
    )?))
}
