//! JSON API over the artifact store. Heavy work runs on the blocking pool;
//! projection and measurement run as jobs polled through `/jobs/{id}`.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use drjudge::generators::GeneratorSpec;
use drjudge::metrics::Metric;
use drjudge::preferences::{TrialRecord, TrialStore};
use serde::{Deserialize, Serialize};

use crate::config::{DatasetInput, InputFormat, PipelineConfig};
use crate::error::{Result, ServiceError};
use crate::pipeline::{self, Run};
use crate::store::Store;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub id: u64,
    pub dataset_id: String,
    pub state: JobState,
    pub progress: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub struct AppState {
    pub store: Store,
    pub cfg: PipelineConfig,
    trials: Mutex<TrialStore>,
    jobs: Mutex<BTreeMap<u64, JobStatus>>,
    next_job: AtomicU64,
    dataset_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl AppState {
    pub fn new(store: Store, cfg: PipelineConfig) -> Result<Arc<Self>> {
        let trials = TrialStore::open(store.trials_path())?;
        Ok(Arc::new(Self {
            store,
            cfg,
            trials: Mutex::new(trials),
            jobs: Mutex::new(BTreeMap::new()),
            next_job: AtomicU64::new(1),
            dataset_locks: Mutex::new(HashMap::new()),
        }))
    }

    fn lock_for(&self, dataset_id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.dataset_locks.lock().unwrap_or_else(|p| p.into_inner());
        locks.entry(dataset_id.to_string()).or_default().clone()
    }

    /// Applies a state change; transitions only move forward.
    fn update_job(&self, id: u64, f: impl FnOnce(&mut JobStatus)) {
        let mut jobs = self.jobs.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(job) = jobs.get_mut(&id) {
            let before = job.state;
            f(job);
            if (job.state as u8) < (before as u8) {
                job.state = before;
            }
        }
    }
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self(e)
    }
}

impl From<drjudge::Error> for ApiError {
    fn from(e: drjudge::Error) -> Self {
        Self(e.into())
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    constraint: Option<&'static str>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let constraint = match &self.0 {
            ServiceError::Core(drjudge::Error::Validation { constraint, .. }) => Some(*constraint),
            _ => None,
        };
        let body = ErrorBody {
            error: self.0.to_string(),
            constraint,
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

fn json_bytes(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T> + Send + 'static) -> Result<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::io("worker", std::io::Error::other(e.to_string())))?
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", get(list_datasets).post(upload_dataset))
        .route("/datasets/{id}/projections", post(start_projections))
        .route("/datasets/{id}/metrics", get(get_metrics))
        .route("/jobs/{id}", get(get_job))
        .route("/rank", post(post_rank))
        .route("/rankings/{dataset_id}", get(get_ranking))
        .route("/metamap/{dataset_id}", get(get_metamap))
        .route("/trials", post(post_trial))
        .with_state(state)
}

pub async fn serve(addr: &str, store: Store, cfg: PipelineConfig) -> Result<()> {
    let app = router(AppState::new(store, cfg)?);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| ServiceError::io(addr, e))?;
    log::info!("listening on {addr}");
    axum::serve(listener, app).await.map_err(|e| ServiceError::io(addr, e))
}

async fn list_datasets(State(st): State<Arc<AppState>>) -> ApiResult<Response> {
    let st2 = st.clone();
    let list = blocking(move || {
        st2.store
            .dataset_ids()?
            .iter()
            .map(|id| st2.store.dataset_summary(id))
            .collect::<Result<Vec<_>>>()
    })
    .await?;
    Ok(Json(list).into_response())
}

#[derive(Debug, Deserialize)]
pub struct UploadParams {
    pub id: String,
    #[serde(default = "default_format")]
    pub format: InputFormat,
    #[serde(default)]
    pub image_side: Option<u32>,
}

fn default_format() -> InputFormat {
    InputFormat::Csv
}

/// CSV body, or a zip archive of class subfolders with `format=images`.
async fn upload_dataset(
    State(st): State<Arc<AppState>>,
    Query(params): Query<UploadParams>,
    body: Bytes,
) -> ApiResult<Response> {
    if params.id.is_empty() || params.id.contains(['/', '\\', '.']) {
        return Err(ServiceError::Config(format!("invalid dataset id {:?}", params.id)).into());
    }
    let st2 = st.clone();
    let summary = blocking(move || {
        let lock = st2.lock_for(&params.id);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        if st2.store.exists(&format!("datasets/{}/dataset.json", params.id)) {
            return Err(drjudge::Error::Conflict(format!("dataset {} already exists", params.id)).into());
        }
        let tmp = tempfile::tempdir().map_err(|e| ServiceError::io("tempdir", e))?;
        let path = match params.format {
            InputFormat::Csv => {
                let p = tmp.path().join("upload.csv");
                std::fs::write(&p, &body).map_err(|e| ServiceError::io(&p, e))?;
                p
            }
            InputFormat::Images => {
                let mut zip = zip::ZipArchive::new(std::io::Cursor::new(body.to_vec()))
                    .map_err(|e| ServiceError::Archive(e.to_string()))?;
                let dir = tmp.path().join("images");
                zip.extract(&dir).map_err(|e| ServiceError::Archive(e.to_string()))?;
                dir
            }
        };
        let input = DatasetInput {
            id: params.id.clone(),
            path,
            format: params.format,
            image_side: params.image_side.unwrap_or(28),
        };
        let mut run = Run::new(&st2.store, &format!("http-upload-{}", params.id), &st2.cfg)?;
        pipeline::ingest_dataset(&mut run, &input)?;
        run.manifest.inputs.clear();
        run.finish()?;
        st2.store.dataset_summary(&params.id)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

#[derive(Debug, Default, Deserialize)]
pub struct ProjectionRequest {
    /// Defaults to the configured generator manifest.
    #[serde(default)]
    pub generators: Option<Vec<GeneratorSpec>>,
    /// Metrics the caller needs; separability metrics require labels.
    #[serde(default)]
    pub metrics: Option<Vec<Metric>>,
}

#[derive(Serialize)]
struct JobCreated {
    job_id: u64,
}

async fn start_projections(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Option<Json<ProjectionRequest>>,
) -> ApiResult<Response> {
    let req = body.map(|b| b.0).unwrap_or_default();
    let summary = st.store.dataset_summary(&id)?;
    if let Some(bad) = req.metrics.iter().flatten().find(|m| m.needs_labels()) {
        if !summary.labeled {
            return Err(ServiceError::Precondition(format!("{bad} needs class labels; dataset {id} has none")).into());
        }
    }
    let job_id = st.next_job.fetch_add(1, Ordering::SeqCst);
    st.jobs.lock().unwrap_or_else(|p| p.into_inner()).insert(
        job_id,
        JobStatus {
            id: job_id,
            dataset_id: id.clone(),
            state: JobState::Pending,
            progress: 0.0,
            error: None,
        },
    );
    let st2 = st.clone();
    tokio::task::spawn_blocking(move || {
        let lock = st2.lock_for(&id);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        st2.update_job(job_id, |j| j.state = JobState::Running);
        let specs = req.generators.unwrap_or_else(|| st2.cfg.generators.clone());
        let result = (|| {
            let mut run = Run::new(&st2.store, &format!("http-project-{id}"), &st2.cfg)?;
            pipeline::project_dataset(&mut run, &st2.cfg, &specs, &id)?;
            st2.update_job(job_id, |j| j.progress = 0.5);
            pipeline::measure_dataset(&mut run, &st2.cfg, &id, &|f| {
                st2.update_job(job_id, |j| j.progress = 0.5 + 0.5 * f);
            })?;
            run.finish()
        })();
        st2.update_job(job_id, |j| match result {
            Ok(_) => {
                j.state = JobState::Done;
                j.progress = 1.0;
            }
            Err(e) => {
                j.state = JobState::Failed;
                j.error = Some(e.to_string());
            }
        });
    });
    Ok((StatusCode::ACCEPTED, Json(JobCreated { job_id })).into_response())
}

async fn get_job(State(st): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<Response> {
    let jobs = st.jobs.lock().unwrap_or_else(|p| p.into_inner());
    let job = jobs
        .get(&id)
        .cloned()
        .ok_or_else(|| ServiceError::NotFound(format!("job {id}")))?;
    Ok(Json(job).into_response())
}

async fn get_metrics(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    st.store.dataset_summary(&id)?;
    Ok(json_bytes(st.store.read_bytes(&format!("datasets/{id}/metrics/normalized.json"))?))
}

#[derive(Debug, Deserialize)]
pub struct RankRequest {
    pub dataset_id: String,
    pub model_id: String,
}

async fn post_rank(State(st): State<Arc<AppState>>, Json(req): Json<RankRequest>) -> ApiResult<Response> {
    let st2 = st.clone();
    let bytes = blocking(move || {
        st2.store.dataset_summary(&req.dataset_id)?;
        let lock = st2.lock_for(&req.dataset_id);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut run = Run::new(&st2.store, &format!("http-rank-{}", req.dataset_id), &st2.cfg)?;
        pipeline::rank_dataset(&mut run, &req.dataset_id, &req.model_id)?;
        run.finish()?;
        st2.store.read_bytes(&format!("rankings/{}.json", req.dataset_id))
    })
    .await?;
    Ok(json_bytes(bytes))
}

async fn get_ranking(State(st): State<Arc<AppState>>, Path(dataset_id): Path<String>) -> ApiResult<Response> {
    Ok(json_bytes(st.store.read_bytes(&format!("rankings/{dataset_id}.json"))?))
}

#[derive(Debug, Deserialize)]
pub struct MetamapParams {
    #[serde(default)]
    pub model_id: Option<String>,
}

/// The stored metamap, or one computed with `model_id` (default `ranker`).
async fn get_metamap(
    State(st): State<Arc<AppState>>,
    Path(dataset_id): Path<String>,
    Query(params): Query<MetamapParams>,
) -> ApiResult<Response> {
    let rel = format!("metamaps/{dataset_id}.json");
    if params.model_id.is_none() && st.store.exists(&rel) {
        return Ok(json_bytes(st.store.read_bytes(&rel)?));
    }
    let st2 = st.clone();
    let bytes = blocking(move || {
        st2.store.dataset_summary(&dataset_id)?;
        let model = params.model_id.unwrap_or_else(|| "ranker".into());
        let lock = st2.lock_for(&dataset_id);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut run = Run::new(&st2.store, &format!("http-metamap-{dataset_id}"), &st2.cfg)?;
        pipeline::metamap_dataset(&mut run, &st2.cfg, &dataset_id, &model)?;
        run.finish()?;
        st2.store.read_bytes(&rel)
    })
    .await?;
    Ok(json_bytes(bytes))
}

#[derive(Serialize)]
struct TrialRecorded {
    trial_id: String,
}

async fn post_trial(State(st): State<Arc<AppState>>, Json(trial): Json<TrialRecord>) -> ApiResult<Response> {
    let st2 = st.clone();
    let trial_id = blocking(move || {
        let id = trial.trial_id.clone();
        let mut trials = st2.trials.lock().unwrap_or_else(|p| p.into_inner());
        pipeline::record_trial(&mut trials, trial)?;
        Ok(id)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(TrialRecorded { trial_id })).into_response())
}
