//! HTTP routes over a [`SessionStore`]. All bodies are JSON except policy
//! exports in DOT.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cbaco_core::obligation::{Event, StepReport};
use cbaco_core::policy::{decide, PolicyGraph};
use cbaco_core::workspace::{export_dot, export_json, export_view, query_duties, DutyFilter, DutyReport, ViewFilter};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::session::{read, write};
use crate::{ServiceError, Session, SessionStore, StrategyRequest};

type Params = Query<HashMap<String, String>>;
type Reply<T> = Result<T, ServiceError>;

pub fn router(store: SessionStore) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(summary).delete(remove))
        .route("/sessions/{id}/graph", get(graph))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/events", post(events))
        .route("/sessions/{id}/strategy", post(strategy))
        .route("/sessions/{id}/derivation", get(derivation))
        .route("/sessions/{id}/derivation/{node}", get(derivation_node).post(select))
        .route("/sessions/{id}/decide", get(decision))
        .route("/sessions/{id}/duties", get(duties))
        .route("/sessions/{id}/fork", post(fork))
        .with_state(store)
}

/// Serve until interrupted. With a snapshot path, sessions are restored
/// from it on start and written back on shutdown.
pub async fn serve(addr: SocketAddr, snapshot: Option<PathBuf>) -> std::io::Result<()> {
    let store = SessionStore::default();
    if let Some(path) = snapshot.as_ref().filter(|p| p.exists()) {
        let bytes = std::fs::read(path)?;
        store.restore(&bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    if let Some(path) = snapshot {
        store.save(&path)?;
    }
    Ok(())
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Reply<T> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(format!("bad request body: {e}")))
}

fn view_of(q: &HashMap<String, String>) -> Reply<ViewFilter> {
    Ok(ViewFilter::parse(q.get("view").map_or("", String::as_str))?)
}

fn node_param(q: &HashMap<String, String>) -> Reply<Option<usize>> {
    q.get("node")
        .map(|n| n.parse().map_err(|_| ServiceError::BadRequest(format!("bad derivation node `{n}`"))))
        .transpose()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub parent: Option<String>,
    pub created: u64,
    pub processed: usize,
    pub next_event: Option<String>,
    pub derivation_size: usize,
    pub cursor: usize,
    pub duties: DutyReport,
}

fn summarize(s: &Session) -> SessionSummary {
    SessionSummary {
        id: s.id.to_string(),
        parent: s.parent.map(|p| p.to_string()),
        created: s.created,
        processed: s.sim.processed(),
        next_event: s.sim.next_event().map(|e| e.id),
        derivation_size: s.tree.len(),
        cursor: s.cursor,
        duties: query_duties(&s.sim, &DutyFilter::default()),
    }
}

async fn create(State(store): State<SessionStore>, body: Bytes) -> Reply<(StatusCode, Json<SessionSummary>)> {
    let s = Session::load(&body)?;
    let out = summarize(&s);
    store.insert(s);
    Ok((StatusCode::CREATED, Json(out)))
}

async fn list(State(store): State<SessionStore>) -> Json<Value> {
    Json(json!({ "sessions": store.ids() }))
}

async fn summary(State(store): State<SessionStore>, Path(id): Path<String>) -> Reply<Json<SessionSummary>> {
    let s = store.get(&id)?;
    let out = summarize(&read(&s));
    Ok(Json(out))
}

async fn remove(State(store): State<SessionStore>, Path(id): Path<String>) -> Reply<StatusCode> {
    store.remove(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

/// The simulation graph, or the state at derivation node `node`.
fn graph_at(s: &Session, node: Option<usize>) -> Reply<PolicyGraph> {
    match node {
        None => Ok(s.sim.graph().clone()),
        Some(n) => {
            let d = s.tree.get(n).ok_or(ServiceError::UnknownNode(n))?;
            Ok(PolicyGraph::from(d.state.graph.clone()))
        }
    }
}

async fn graph(State(store): State<SessionStore>, Path(id): Path<String>, Query(q): Params) -> Reply<Response> {
    let s = store.get(&id)?;
    let (view, node) = (view_of(&q)?, node_param(&q)?);
    let g = graph_at(&read(&s), node)?;
    Ok(Json(export_view(&g, &view)).into_response())
}

async fn export(State(store): State<SessionStore>, Path(id): Path<String>, Query(q): Params) -> Reply<Response> {
    let s = store.get(&id)?;
    let (view, node) = (view_of(&q)?, node_param(&q)?);
    let g = graph_at(&read(&s), node)?;
    match q.get("format").map_or("json", String::as_str) {
        "json" => Ok(([(header::CONTENT_TYPE, "application/json")], export_json(&g, &view)).into_response()),
        "dot" => Ok(([(header::CONTENT_TYPE, "text/vnd.graphviz")], export_dot(&g, &view)).into_response()),
        other => Err(ServiceError::BadRequest(format!("unknown export format `{other}`"))),
    }
}

/// One event or a list of them.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Events {
    One(Event),
    Many(Vec<Event>),
}

#[derive(Debug, Serialize)]
struct EventsReply {
    reports: Vec<StepReport>,
    duties: DutyReport,
}

async fn events(State(store): State<SessionStore>, Path(id): Path<String>, body: Bytes) -> Reply<Json<EventsReply>> {
    let s = store.get(&id)?;
    let events = match parse_body(&body)? {
        Events::One(e) => vec![e],
        Events::Many(es) => es,
    };
    let mut s = write(&s);
    let reports = s.inject(events)?;
    Ok(Json(EventsReply { reports, duties: query_duties(&s.sim, &DutyFilter::default()) }))
}

async fn strategy(State(store): State<SessionStore>, Path(id): Path<String>, body: Bytes) -> Reply<Response> {
    let s = store.get(&id)?;
    let req: StrategyRequest = parse_body(&body)?;
    // rewriting can take a while; keep it off the async workers
    let delta = tokio::task::spawn_blocking(move || write(&s).run_strategy(&req))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok(Json(delta).into_response())
}

async fn derivation(State(store): State<SessionStore>, Path(id): Path<String>) -> Reply<Json<Value>> {
    let s = store.get(&id)?;
    let s = read(&s);
    Ok(Json(json!({ "cursor": s.cursor, "nodes": s.tree.outline() })))
}

async fn derivation_node(
    State(store): State<SessionStore>,
    Path((id, node)): Path<(String, usize)>,
    Query(q): Params,
) -> Reply<Json<Value>> {
    let s = store.get(&id)?;
    let view = view_of(&q)?;
    let s = read(&s);
    let d = s.tree.get(node).ok_or(ServiceError::UnknownNode(node))?;
    let step = s.tree.steps_from(node).into_iter().next();
    let g = PolicyGraph::from(d.state.graph.clone());
    Ok(Json(json!({
        "step": step,
        "path": s.tree.path_to(node),
        "children": s.tree.children(node).map(|c| c.id).collect::<Vec<_>>(),
        "graph": export_view(&g, &view),
        "position": d.state.position,
        "banned": d.state.banned,
    })))
}

/// Move the cursor, so the next strategy run continues from `node`.
async fn select(State(store): State<SessionStore>, Path((id, node)): Path<(String, usize)>) -> Reply<Json<Value>> {
    let s = store.get(&id)?;
    let mut s = write(&s);
    if s.tree.get(node).is_none() {
        return Err(ServiceError::UnknownNode(node));
    }
    s.cursor = node;
    Ok(Json(json!({ "cursor": node })))
}

async fn decision(State(store): State<SessionStore>, Path(id): Path<String>, Query(q): Params) -> Reply<Response> {
    let s = store.get(&id)?;
    let arg = |k: &str| q.get(k).ok_or_else(|| ServiceError::BadRequest(format!("missing query parameter `{k}`")));
    let (p, a, r) = (arg("p")?, arg("a")?, arg("r")?);
    let d = decide(read(&s).sim.graph(), p, a, r)?;
    Ok(Json(d).into_response())
}

async fn duties(State(store): State<SessionStore>, Path(id): Path<String>, Query(q): Params) -> Reply<Json<DutyReport>> {
    let s = store.get(&id)?;
    let state = q.get("state").cloned();
    if let Some(t) = state.as_deref().filter(|t| !["pending", "fulfilled", "violated"].contains(t)) {
        return Err(ServiceError::BadRequest(format!("unknown duty state `{t}`")));
    }
    let filter = DutyFilter { principal: q.get("principal").cloned(), state };
    let report = query_duties(&read(&s).sim, &filter);
    Ok(Json(report))
}

async fn fork(State(store): State<SessionStore>, Path(id): Path<String>) -> Reply<(StatusCode, Json<SessionSummary>)> {
    let s = store.get(&id)?;
    let copy = read(&s).fork();
    let out = summarize(&copy);
    store.insert(copy);
    Ok((StatusCode::CREATED, Json(out)))
}
