//! HTTP JSON API: translation, execution, knowledge lookup, corpus samples
//! and operator trees, plus static files under `/`.

pub mod geojson;
pub mod response;

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nlst_core::catalog::{kb_lookup, load_dataset, CatalogError, Database, EntryRef};
use nlst_core::corpus::{generate, QueryType};
use nlst_core::nlu::TypeClassifier;
use serde::Deserialize;
use serde_json::{json, Value as JsonValue};
use tower_http::services::ServeDir;

pub use response::{answer, QueryRequest, QueryResponse};

pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.1;
pub const MAX_CORPUS_N: usize = 10_000;
const KEPT_TREES: usize = 64;

/// Immutable after startup apart from the operator-tree memo.
pub struct AppState {
    pub dbs: BTreeMap<String, Arc<Database>>,
    pub clf: Arc<TypeClassifier>,
    pub seed: u64,
    pub sample_fraction: f64,
    trees: Mutex<(u64, BTreeMap<u64, JsonValue>)>,
}

impl AppState {
    pub fn new(dbs: Vec<Database>, clf: TypeClassifier, seed: u64) -> Self {
        AppState {
            dbs: dbs.into_iter().map(|d| (d.name.clone(), Arc::new(d))).collect(),
            clf: Arc::new(clf),
            seed,
            sample_fraction: DEFAULT_SAMPLE_FRACTION,
            trees: Mutex::new((0, BTreeMap::new())),
        }
    }

    fn remember(&self, tree: Option<&JsonValue>) -> u64 {
        let mut g = self.trees.lock().unwrap_or_else(|e| e.into_inner());
        g.0 += 1;
        let id = g.0;
        if let Some(t) = tree {
            g.1.insert(id, t.clone());
            while g.1.len() > KEPT_TREES {
                g.1.pop_first();
            }
        }
        id
    }

    fn tree(&self, id: Option<u64>) -> Option<JsonValue> {
        let g = self.trees.lock().unwrap_or_else(|e| e.into_inner());
        match id {
            Some(i) => g.1.get(&i).cloned(),
            None => g.1.last_key_value().map(|(_, t)| t.clone()),
        }
    }
}

/// Every dataset directory (one holding `catalog.json`) under `dir`, by
/// name. A missing directory yields no datasets.
pub fn load_databases(dir: &Path) -> Result<Vec<Database>, CatalogError> {
    let Ok(entries) = fs::read_dir(dir) else { return Ok(Vec::new()) };
    let mut dirs: Vec<PathBuf> =
        entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.join("catalog.json").is_file()).collect();
    dirs.sort();
    let mut dbs = dirs.into_iter().map(load_dataset).collect::<Result<Vec<_>, _>>()?;
    dbs.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(dbs)
}

fn fail(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(json!({"error": msg.into()}))).into_response()
}

fn database(state: &AppState, name: &str) -> Result<Arc<Database>, Response> {
    state.dbs.get(name).cloned().ok_or_else(|| fail(StatusCode::NOT_FOUND, format!("unknown database '{name}'")))
}

async fn query(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: QueryRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return fail(StatusCode::BAD_REQUEST, format!("malformed request: {e}")),
    };
    if req.nlq.trim().is_empty() {
        return fail(StatusCode::BAD_REQUEST, "nlq must not be empty");
    }
    if req.sample_fraction.is_some_and(|f| !(f > 0.0 && f <= 1.0)) {
        return fail(StatusCode::BAD_REQUEST, "sample_fraction must be in (0, 1]");
    }
    let db = match database(&state, &req.db) {
        Ok(d) => d,
        Err(r) => return r,
    };
    let clf = state.clf.clone();
    let seed = req.seed.unwrap_or(state.seed);
    let fraction = req.sample_fraction.unwrap_or(state.sample_fraction);
    let work = tokio::task::spawn_blocking(move || answer(&db, &clf, &req.nlq, req.optimize, fraction, seed)).await;
    match work {
        Ok(mut resp) => {
            resp.id = state.remember(resp.operator_tree.as_ref());
            Json(resp).into_response()
        }
        Err(e) => fail(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

#[derive(Deserialize)]
struct KnowledgeParams {
    db: String,
    #[serde(default)]
    q: String,
}

async fn knowledge(State(state): State<Arc<AppState>>, Query(p): Query<KnowledgeParams>) -> Response {
    let db = match database(&state, &p.db) {
        Ok(d) => d,
        Err(r) => return r,
    };
    if p.q.trim().is_empty() {
        return fail(StatusCode::BAD_REQUEST, "q must not be empty");
    }
    let kb = db.kb();
    // whole-phrase matches first, then entries naming the phrase as words
    let mut hits = kb_lookup(kb, &p.q);
    for m in kb.containing(&p.q) {
        if !hits.iter().any(|h| h.entry == m.entry) {
            hits.push(m);
        }
    }
    let out: Vec<JsonValue> = hits
        .into_iter()
        .map(|m| {
            let (relation, mbr) = match m.entry {
                EntryRef::Relation(i) => (kb.relations[i].relation.clone(), None),
                EntryRef::Location(i) => {
                    let l = &kb.locations[i];
                    (l.relation.clone(), Some(l.geometry.bbox()))
                }
                EntryRef::Object(i) => {
                    let o = &kb.objects[i];
                    let mbr = db.relation(&o.relation).and_then(|r| {
                        let ai = r.mpoint_attr()?;
                        r.tuples.get(o.tuple_id)?[ai].bbox()
                    });
                    (o.relation.clone(), mbr)
                }
            };
            json!({
                "name": kb.display_name(m.entry),
                "kind": m.kind,
                "score": m.score,
                "surface": m.surface,
                "relation": relation,
                "mbr": mbr,
            })
        })
        .collect();
    Json(out).into_response()
}

#[derive(Deserialize)]
struct CorpusParams {
    db: String,
    n: i64,
    #[serde(rename = "type")]
    query_type: Option<String>,
}

async fn corpus(State(state): State<Arc<AppState>>, Query(p): Query<CorpusParams>) -> Response {
    let db = match database(&state, &p.db) {
        Ok(d) => d,
        Err(r) => return r,
    };
    if p.n < 1 || p.n as usize > MAX_CORPUS_N {
        return fail(StatusCode::BAD_REQUEST, format!("n must be between 1 and {MAX_CORPUS_N}"));
    }
    let n = p.n as usize;
    let want = match p.query_type.as_deref().map(QueryType::parse) {
        None => None,
        Some(Some(t)) => Some(t),
        Some(None) => return fail(StatusCode::BAD_REQUEST, "unknown query type"),
    };
    let seed = state.seed;
    let work = tokio::task::spawn_blocking(move || match want {
        None => generate(&db, n, seed),
        // entry i has type i mod 7, so 7n entries hold n of each type
        Some(t) => generate(&db, 7 * n, seed).map(|v| v.into_iter().filter(|e| e.query_type == t).collect()),
    })
    .await;
    match work {
        Ok(Ok(entries)) => Json(entries).into_response(),
        Ok(Err(e)) => fail(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        Err(e) => fail(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

/// Name, relation schemas and statistics of one database.
pub fn describe(db: &Database) -> JsonValue {
    let relations: Vec<JsonValue> = db
        .relations()
        .iter()
        .map(|r| json!({"name": r.name, "attributes": r.attributes, "derived_from": r.derived_from}))
        .collect();
    let stats: Vec<_> = db.all_stats().collect();
    json!({"name": db.name, "relations": relations, "stats": stats})
}

async fn databases(State(state): State<Arc<AppState>>) -> Response {
    Json(state.dbs.values().map(|d| describe(d)).collect::<Vec<_>>()).into_response()
}

#[derive(Deserialize)]
struct TreeParams {
    id: Option<u64>,
}

async fn plan_tree(State(state): State<Arc<AppState>>, Query(p): Query<TreeParams>) -> Response {
    match state.tree(p.id) {
        Some(t) => Json(t).into_response(),
        None => fail(StatusCode::NOT_FOUND, "no such operator tree"),
    }
}

/// API routes, with `static_dir` (when given) served for everything else.
pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/query", post(query))
        .route("/api/knowledge", get(knowledge))
        .route("/api/corpus", get(corpus))
        .route("/api/databases", get(databases))
        .route("/api/plan-tree", get(plan_tree))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(state: Arc<AppState>, port: u16, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let app = router(state, static_dir.as_deref());
    let addr = SocketAddr::from(([0, 0, 0, 0], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await
}
