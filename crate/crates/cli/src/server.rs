// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! HTTP/JSON API over an immutable engine.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use sgmatch::data::{GraphRecord, PatternRecord};
use sgmatch::engine::{approximate_query, query, NeuralEngine, QueryFilters, QueryResult};
use sgmatch::graph::QueryPattern;

pub const DEFAULT_PAGE_SIZE: usize = 20;
pub const MAX_PAGE_SIZE: usize = 500;

pub struct AppState {
    engine: NeuralEngine,
    overview: Vec<[f64; 2]>,
}

impl AppState {
    /// `overview` must hold one coordinate pair per database graph.
    pub fn new(engine: NeuralEngine, overview: Vec<[f64; 2]>) -> Self {
        assert_eq!(
            overview.len(),
            engine.database().len(),
            "one overview point per graph"
        );
        Self { engine, overview }
    }

    pub fn engine(&self) -> &NeuralEngine {
        &self.engine
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(ErrorBody {
                error: self.message,
            }),
        )
            .into_response()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paging {
    page: Option<usize>,
    page_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub graph_id: String,
    pub name: Option<String>,
    pub category: Option<String>,
    pub node_count: usize,
    pub edge_count: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphPage {
    pub total: usize,
    /// One-based page number.
    pub page: usize,
    pub page_size: usize,
    pub items: Vec<GraphSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub graphs: usize,
    pub nodes: usize,
    pub edges: usize,
    /// Node count to number of graphs with that many nodes.
    pub node_count_histogram: BTreeMap<usize, usize>,
    pub edge_count_histogram: BTreeMap<usize, usize>,
    /// Label name to number of nodes carrying it.
    pub label_counts: BTreeMap<String, usize>,
    pub category_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub pattern: PatternRecord,
    #[serde(default)]
    pub approximate: bool,
    #[serde(default)]
    pub max_steps: usize,
    #[serde(default)]
    pub filters: QueryFilters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub results: Vec<QueryResult>,
    pub elapsed_ms: f64,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/graphs", get(list_graphs))
        .route("/graphs/{id}", get(get_graph))
        .route("/query", post(post_query))
        .route("/stats", get(stats))
        .with_state(state)
}

async fn list_graphs(
    State(state): State<Arc<AppState>>,
    paging: Result<Query<Paging>, QueryRejection>,
) -> Result<Json<GraphPage>, ApiError> {
    let Query(paging) = paging.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let page = paging.page.unwrap_or(1);
    let page_size = paging.page_size.unwrap_or(DEFAULT_PAGE_SIZE);
    if page == 0 {
        return Err(ApiError::bad_request("page is one-based"));
    }
    if page_size == 0 || page_size > MAX_PAGE_SIZE {
        return Err(ApiError::bad_request(format!(
            "page_size must be in 1..={MAX_PAGE_SIZE}"
        )));
    }
    let graphs = &state.engine.database().graphs;
    let start = (page - 1).saturating_mul(page_size).min(graphs.len());
    let end = start.saturating_add(page_size).min(graphs.len());
    let items = (start..end)
        .map(|i| {
            let g = &graphs[i];
            let [x, y] = state.overview[i];
            GraphSummary {
                graph_id: g.graph_id().to_string(),
                name: g.name().map(str::to_string),
                category: g.category().map(str::to_string),
                node_count: g.node_count(),
                edge_count: g.edge_count(),
                x,
                y,
            }
        })
        .collect();
    Ok(Json(GraphPage {
        total: graphs.len(),
        page,
        page_size,
        items,
    }))
}

async fn get_graph(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<GraphRecord>, ApiError> {
    let db = state.engine.database();
    let g = db.get(&id).ok_or_else(|| ApiError {
        status: StatusCode::NOT_FOUND,
        message: format!("unknown graph {id:?}"),
    })?;
    Ok(Json(GraphRecord::from_graph(g, &db.vocabulary)))
}

async fn stats(State(state): State<Arc<AppState>>) -> Json<Stats> {
    let db = state.engine.database();
    let mut s = Stats {
        graphs: db.len(),
        nodes: 0,
        edges: 0,
        node_count_histogram: BTreeMap::new(),
        edge_count_histogram: BTreeMap::new(),
        label_counts: BTreeMap::new(),
        category_counts: BTreeMap::new(),
    };
    for g in &db.graphs {
        s.nodes += g.node_count();
        s.edges += g.edge_count();
        *s.node_count_histogram.entry(g.node_count()).or_default() += 1;
        *s.edge_count_histogram.entry(g.edge_count()).or_default() += 1;
        if let Some(c) = g.category() {
            *s.category_counts.entry(c.to_string()).or_default() += 1;
        }
        for i in 0..g.node_count() {
            let name = db.vocabulary.name(g.label(i)).unwrap_or("?").to_string();
            *s.label_counts.entry(name).or_default() += 1;
        }
    }
    Json(s)
}

/// Runs the query the request describes; the HTTP handler adds timing only.
pub fn answer(
    engine: &NeuralEngine,
    pattern: &QueryPattern,
    request: &QueryRequest,
) -> sgmatch::Result<Vec<QueryResult>> {
    if request.approximate {
        approximate_query(engine, pattern, &request.filters, request.max_steps)
    } else {
        query(engine, pattern, &request.filters)
    }
}

async fn post_query(
    State(state): State<Arc<AppState>>,
    body: Result<Json<QueryRequest>, JsonRejection>,
) -> Result<Json<QueryResponse>, ApiError> {
    let Json(request) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let pattern = request
        .pattern
        .to_pattern(&state.engine.database().vocabulary)
        .map_err(|e| ApiError::bad_request(format!("invalid pattern: {e}")))?;
    let start = Instant::now();
    let internal = |message: String| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        message,
    };
    let results = tokio::task::spawn_blocking(move || answer(&state.engine, &pattern, &request))
        .await
        .map_err(|e| internal(e.to_string()))?
        .map_err(|e| internal(e.to_string()))?;
    Ok(Json(QueryResponse {
        results,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }))
}

/// Binds and serves until the process is stopped.
pub async fn serve(state: Arc<AppState>, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
