//! HTTP JSON API over loaded datasets: listing and upload, missingness
//! reports and laid-out scenes. Selection travels in each request, so the
//! server keeps no per-client state.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, OnceLock, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use missview_core::scene::BarScale;
use missview_core::stats::{randomness_report_with, DEFAULT_BINS};
use missview_core::{
    build_scene, parse_table, schema, ArcMode, Dataset, Error as CoreError, IngestConfig, Layout, MissingnessSummary,
    SceneOptions,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

/// Upload size cap; the default extractor limit is too small for real tables.
pub const MAX_UPLOAD_BYTES: usize = 256 * 1024 * 1024;

/// An immutable dataset snapshot with its lazily computed summary.
#[derive(Debug)]
pub struct DatasetEntry {
    pub id: String,
    pub dataset: Dataset,
    summary: OnceLock<MissingnessSummary>,
}

impl DatasetEntry {
    pub fn new(id: impl Into<String>, dataset: Dataset) -> Self {
        DatasetEntry {
            id: id.into(),
            dataset,
            summary: OnceLock::new(),
        }
    }

    pub fn summary(&self) -> &MissingnessSummary {
        self.summary.get_or_init(|| MissingnessSummary::compute(&self.dataset))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateId(pub String);

/// Datasets keyed by id. Uploads swap whole entries, so a reader holding an
/// entry never sees a partial dataset and a replaced entry drops its cache.
#[derive(Debug, Default)]
pub struct Catalog {
    entries: RwLock<BTreeMap<String, Arc<DatasetEntry>>>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, id: &str, dataset: Dataset, replace: bool) -> Result<Arc<DatasetEntry>, DuplicateId> {
        let mut entries = self.entries.write().expect("catalog lock");
        if !replace && entries.contains_key(id) {
            return Err(DuplicateId(id.to_owned()));
        }
        let entry = Arc::new(DatasetEntry::new(id, dataset));
        entries.insert(id.to_owned(), Arc::clone(&entry));
        Ok(entry)
    }

    pub fn get(&self, id: &str) -> Option<Arc<DatasetEntry>> {
        self.entries.read().expect("catalog lock").get(id).cloned()
    }

    pub fn list(&self) -> Vec<Arc<DatasetEntry>> {
        self.entries.read().expect("catalog lock").values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("catalog lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Loads every `*.csv` and `*.tsv` file in `dir`, keyed by file stem.
    /// TSV files use a tab delimiter regardless of `cfg.delimiter`.
    pub fn load_dir(dir: &Path, cfg: &IngestConfig) -> Result<Catalog, CoreError> {
        let catalog = Catalog::new();
        let mut paths: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        for path in paths {
            let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            let file_cfg = match ext.as_deref() {
                Some("csv") => cfg.clone(),
                Some("tsv") => IngestConfig {
                    delimiter: '\t',
                    ..cfg.clone()
                },
                _ => continue,
            };
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let file = fs::File::open(&path)?;
            let dataset = parse_table(file, &file_cfg)
                .map_err(|e| CoreError::InvalidDataset(format!("{}: {e}", path.display())))?;
            catalog.insert(id, dataset, false).map_err(|DuplicateId(id)| {
                CoreError::InvalidDataset(format!("two files share the dataset id `{id}`"))
            })?;
        }
        Ok(catalog)
    }
}

/// Cross-origin policy: permissive by default, or a fixed origin list
/// (empty for same-origin only).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum CorsPolicy {
    #[default]
    Permissive,
    Origins(Vec<String>),
}

impl CorsPolicy {
    fn layer(&self) -> Result<CorsLayer, String> {
        match self {
            CorsPolicy::Permissive => Ok(CorsLayer::permissive()),
            CorsPolicy::Origins(origins) => {
                let values = origins
                    .iter()
                    .map(|o| HeaderValue::from_str(o).map_err(|_| format!("invalid origin `{o}`")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(CorsLayer::new()
                    .allow_origin(AllowOrigin::list(values))
                    .allow_methods([axum::http::Method::GET, axum::http::Method::POST])
                    .allow_headers([axum::http::header::CONTENT_TYPE]))
            }
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown dataset `{id}`"))
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let status = match e {
            CoreError::Io(_) | CoreError::Json(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(status = %self.status, "{}", self.message);
        }
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Serialize)]
struct VariableInfo {
    name: String,
    kind: missview_core::VariableKind,
}

#[derive(Debug, Serialize)]
struct DatasetInfo {
    id: String,
    n_items: usize,
    variables: Vec<VariableInfo>,
}

impl DatasetInfo {
    fn of(entry: &DatasetEntry) -> Self {
        DatasetInfo {
            id: entry.id.clone(),
            n_items: entry.dataset.n_items(),
            variables: entry
                .dataset
                .variables()
                .iter()
                .map(|v| VariableInfo {
                    name: v.name().to_owned(),
                    kind: v.kind(),
                })
                .collect(),
        }
    }
}

pub fn router(catalog: Arc<Catalog>, cors: &CorsPolicy) -> Result<Router, String> {
    Ok(Router::new()
        .route("/health", get(health))
        .route("/datasets", get(list_datasets).post(upload_dataset))
        .route("/datasets/{id}/stats", get(dataset_stats))
        .route("/datasets/{id}/scene", get(dataset_scene))
        .route("/schema/{name}", get(schema_document))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .layer(cors.layer()?)
        .with_state(catalog))
}

/// Serves `app` until Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn list_datasets(State(catalog): State<Arc<Catalog>>) -> Json<Vec<DatasetInfo>> {
    Json(catalog.list().iter().map(|e| DatasetInfo::of(e)).collect())
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    id: Option<String>,
    delimiter: Option<String>,
    missing_tokens: Option<String>,
    replace: Option<String>,
}

fn parse_bool(name: &str, value: Option<&str>) -> ApiResult<bool> {
    match value {
        None => Ok(false),
        Some("true" | "1" | "yes" | "") => Ok(true),
        Some("false" | "0" | "no") => Ok(false),
        Some(other) => Err(ApiError::bad_request(format!("`{name}` must be true or false, got `{other}`"))),
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

async fn upload_dataset(
    State(catalog): State<Arc<Catalog>>,
    Query(q): Query<UploadQuery>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<DatasetInfo>)> {
    let id = q.id.ok_or_else(|| ApiError::bad_request("query parameter `id` is required"))?;
    if !valid_id(&id) {
        return Err(ApiError::bad_request(format!(
            "dataset id `{id}` may only contain letters, digits, `-`, `_` and `.`"
        )));
    }
    let replace = parse_bool("replace", q.replace.as_deref())?;
    let mut cfg = IngestConfig::default();
    if let Some(d) = q.delimiter {
        cfg.delimiter = match d.as_str() {
            "tab" | "\\t" => '\t',
            _ => {
                let mut chars = d.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => c,
                    _ => return Err(ApiError::bad_request(format!("delimiter must be one character, got `{d}`"))),
                }
            }
        };
    }
    if let Some(tokens) = q.missing_tokens {
        cfg.missing_tokens = tokens.split(',').map(str::to_owned).collect();
    }
    if !replace && catalog.get(&id).is_some() {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("dataset `{id}` already exists")));
    }
    let dataset = tokio::task::spawn_blocking(move || parse_table(body.as_ref(), &cfg))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let entry = catalog
        .insert(&id, dataset, replace)
        .map_err(|DuplicateId(id)| ApiError::new(StatusCode::CONFLICT, format!("dataset `{id}` already exists")))?;
    tracing::info!(id = %entry.id, items = entry.dataset.n_items(), "dataset loaded");
    Ok((StatusCode::CREATED, Json(DatasetInfo::of(&entry))))
}

fn parse_bins(value: Option<&str>) -> ApiResult<usize> {
    match value {
        None => Ok(DEFAULT_BINS),
        Some(text) => match text.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(ApiError::bad_request(format!("`bins` must be a positive integer, got `{text}`"))),
        },
    }
}

fn entry_for(catalog: &Catalog, id: &str) -> ApiResult<Arc<DatasetEntry>> {
    catalog.get(id).ok_or_else(|| ApiError::not_found(id))
}

fn check_select(entry: &DatasetEntry, select: Option<&str>) -> ApiResult<Option<usize>> {
    select
        .map(|name| {
            entry
                .dataset
                .index_of(name)
                .map_err(|_| ApiError::bad_request(format!("unknown variable `{name}` in `select`")))
        })
        .transpose()
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

#[derive(Debug, Deserialize)]
struct StatsQuery {
    bins: Option<String>,
    select: Option<String>,
}

async fn dataset_stats(
    State(catalog): State<Arc<Catalog>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<StatsQuery>,
) -> ApiResult<Json<Value>> {
    let entry = entry_for(&catalog, &id)?;
    let bins = parse_bins(q.bins.as_deref())?;
    let select = check_select(&entry, q.select.as_deref())?;
    blocking(move || {
        let report = randomness_report_with(&entry.dataset, entry.summary(), bins, select)?;
        Ok(Json(serde_json::to_value(report).map_err(CoreError::from)?))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct SceneQuery {
    layout: Option<String>,
    select: Option<String>,
    arcs: Option<String>,
    attach: Option<String>,
    bins: Option<String>,
    bar_scale: Option<String>,
}

async fn dataset_scene(
    State(catalog): State<Arc<Catalog>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<SceneQuery>,
) -> ApiResult<Json<Value>> {
    let entry = entry_for(&catalog, &id)?;
    let layout: Layout = match q.layout.as_deref() {
        None => Layout::Linear,
        Some(text) => text.parse().map_err(|e: CoreError| ApiError::bad_request(e.to_string()))?,
    };
    let arc_mode: ArcMode = match q.arcs.as_deref() {
        None => ArcMode::Selected,
        Some(text) => text.parse().map_err(|e: CoreError| ApiError::bad_request(e.to_string()))?,
    };
    let bar_scale = match q.bar_scale.as_deref() {
        None | Some("peak") => BarScale::Peak,
        Some("shared") => BarScale::SharedCount,
        Some(other) => return Err(ApiError::bad_request(format!("`bar_scale` must be peak or shared, got `{other}`"))),
    };
    let options = SceneOptions {
        bins: parse_bins(q.bins.as_deref())?,
        arc_mode,
        attach_glyphs: parse_bool("attach", q.attach.as_deref())?,
        bar_scale,
    };
    check_select(&entry, q.select.as_deref())?;
    let select = q.select;
    blocking(move || {
        let scene = build_scene(&entry.dataset, entry.summary(), layout, select.as_deref(), &options)?;
        Ok(Json(serde_json::to_value(scene).map_err(CoreError::from)?))
    })
    .await
}

async fn schema_document(UrlPath(name): UrlPath<String>) -> ApiResult<Response> {
    let text = match name.as_str() {
        "stats" => schema::STATS_SCHEMA,
        "scene" => schema::SCENE_SCHEMA,
        _ => return Err(ApiError::new(StatusCode::NOT_FOUND, format!("no schema named `{name}`"))),
    };
    Ok(([(axum::http::header::CONTENT_TYPE, "application/schema+json")], text).into_response())
}
