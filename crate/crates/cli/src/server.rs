//! HTTP transport over [`Workbench`].

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use prospect_core::delphi::DelphiBallot;
use prospect_core::ontology::PropertyInstance;
use prospect_core::project::{Action, DecisionRecord, Project};
use prospect_core::service::{openapi, ApiError, Role, Session, Settings, Workbench};

use crate::app::Cli;

/// JSON error body with the status carried by [`ApiError`].
pub struct HttpError(ApiError);

impl From<ApiError> for HttpError {
    fn from(e: ApiError) -> Self {
        HttpError(e)
    }
}

impl From<JsonRejection> for HttpError {
    fn from(e: JsonRejection) -> Self {
        HttpError(ApiError::bad_request(e.body_text()))
    }
}

impl IntoResponse for HttpError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.0.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(&self.0)).into_response()
    }
}

type Shared = Arc<Workbench>;
type Reply = Result<Json<Value>, HttpError>;

fn token(headers: &HeaderMap) -> Option<&str> {
    if let Some(v) = headers.get("authorization").and_then(|v| v.to_str().ok()) {
        return v.strip_prefix("Bearer ").map(str::trim);
    }
    headers.get("x-session").and_then(|v| v.to_str().ok())
}

fn expected_seq(headers: &HeaderMap) -> Result<Option<u64>, HttpError> {
    match headers.get("x-expected-seq") {
        None => Ok(None),
        Some(v) => v
            .to_str()
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .map(Some)
            .ok_or_else(|| ApiError::bad_request("X-Expected-Seq must be an integer").into()),
    }
}

fn session(wb: &Workbench, headers: &HeaderMap) -> Result<Session, HttpError> {
    Ok(wb.session(token(headers))?)
}

fn mutation(record: DecisionRecord) -> Json<Value> {
    Json(json!({ "seq": record.seq, "record": record }))
}

#[derive(Deserialize)]
struct OpenSession {
    actor: String,
    role: Role,
}

async fn open_session(
    State(wb): State<Shared>,
    body: Result<Json<OpenSession>, JsonRejection>,
) -> Result<(StatusCode, Json<Session>), HttpError> {
    let Json(req) = body?;
    Ok((StatusCode::CREATED, Json(wb.open_session(&req.actor, req.role)?)))
}

#[derive(Deserialize)]
struct SuggestQuery {
    threshold: Option<f64>,
    limit: Option<usize>,
}

#[derive(Deserialize)]
struct AnalysisQuery {
    k_max: Option<usize>,
    n_keys: Option<usize>,
}

#[derive(Deserialize)]
struct RankingQuery {
    round: Option<u32>,
    invited: Option<usize>,
}

#[derive(Deserialize)]
struct JournalQuery {
    since: Option<u64>,
}

async fn decide_suggestion(
    wb: Shared,
    headers: HeaderMap,
    action: Action,
) -> Reply {
    let s = session(&wb, &headers)?;
    let seq = expected_seq(&headers)?;
    Ok(mutation(wb.decide(&s, action, seq)?))
}

async fn accept(State(wb): State<Shared>, headers: HeaderMap, Path(id): Path<String>) -> Reply {
    decide_suggestion(wb, headers, Action::AcceptSuggestion { suggestion_id: id }).await
}

async fn reject(State(wb): State<Shared>, headers: HeaderMap, Path(id): Path<String>) -> Reply {
    decide_suggestion(wb, headers, Action::RejectSuggestion { suggestion_id: id }).await
}

async fn actions(
    State(wb): State<Shared>,
    headers: HeaderMap,
    body: Result<Json<Action>, JsonRejection>,
) -> Reply {
    let s = session(&wb, &headers)?;
    let Json(action) = body?;
    Ok(mutation(wb.decide(&s, action, expected_seq(&headers)?)?))
}

async fn ballots(
    State(wb): State<Shared>,
    headers: HeaderMap,
    body: Result<Json<DelphiBallot>, JsonRejection>,
) -> Reply {
    let s = session(&wb, &headers)?;
    let Json(ballot) = body?;
    let action = Action::SubmitBallot { ballot };
    Ok(mutation(wb.decide(&s, action, expected_seq(&headers)?)?))
}

async fn arguments(
    State(wb): State<Shared>,
    headers: HeaderMap,
    body: Result<Json<PropertyInstance>, JsonRejection>,
) -> Reply {
    let s = session(&wb, &headers)?;
    let Json(instance) = body?;
    let action = Action::AddArgument { instance };
    Ok(mutation(wb.decide(&s, action, expected_seq(&headers)?)?))
}

/// Builds the router. With `static_dir`, unmatched paths are served from it.
pub fn router(wb: Shared, static_dir: Option<PathBuf>) -> Router {
    let router = Router::new()
        .route("/sessions", post(open_session))
        .route("/project", get(|State(wb): State<Shared>| async move { Json(wb.summary()) }))
        .route("/corpus", get(|State(wb): State<Shared>| async move { Json(wb.corpus()) }))
        .route("/ontology", get(|State(wb): State<Shared>| async move { Json(wb.ontology()) }))
        .route(
            "/suggestions",
            get(|State(wb): State<Shared>, Query(q): Query<SuggestQuery>| async move {
                Ok::<_, HttpError>(Json(wb.suggestions(q.threshold, q.limit)?))
            }),
        )
        .route("/suggestions/:id/accept", post(accept))
        .route("/suggestions/:id/reject", post(reject))
        .route("/actions", post(actions))
        .route(
            "/matrix",
            get(|State(wb): State<Shared>| async move { Ok::<_, HttpError>(Json(wb.matrix()?)) }),
        )
        .route(
            "/scores",
            get(|State(wb): State<Shared>, Query(q): Query<AnalysisQuery>| async move {
                Ok::<_, HttpError>(Json(wb.scores(q.k_max)?))
            }),
        )
        .route(
            "/keys",
            get(|State(wb): State<Shared>, Query(q): Query<AnalysisQuery>| async move {
                Ok::<_, HttpError>(Json(wb.keys(q.k_max, q.n_keys)?))
            }),
        )
        .route(
            "/delphi/questionnaire",
            get(|State(wb): State<Shared>| async move {
                Ok::<_, HttpError>(Json(wb.questionnaire()?))
            }),
        )
        .route("/ballots", post(ballots))
        .route(
            "/delphi/ranking",
            get(|State(wb): State<Shared>, Query(q): Query<RankingQuery>| async move {
                Ok::<_, HttpError>(Json(wb.tally(q.round.unwrap_or(1), q.invited)?))
            }),
        )
        .route(
            "/attitudes",
            get(|State(wb): State<Shared>| async move { Ok::<_, HttpError>(Json(wb.attitudes()?)) }),
        )
        .route("/arguments", post(arguments))
        .route(
            "/alignment/report",
            get(|State(wb): State<Shared>| async move { Json(wb.alignment_report()) }),
        )
        .route(
            "/journal",
            get(|State(wb): State<Shared>, Query(q): Query<JournalQuery>| async move {
                Json(wb.journal(q.since.unwrap_or(0)))
            }),
        )
        .route("/openapi.json", get(|| async { Json(openapi()) }));
    let router = match static_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    };
    router.with_state(wb)
}

pub fn serve(project: Project, cli: &Cli, bind: &str, static_dir: Option<PathBuf>) -> Result<()> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .try_init();
    let settings = Settings {
        threshold: cli.threshold,
        k_max: cli.k_max,
        n_keys: cli.n_keys,
    };
    let wb = Arc::new(Workbench::new(project, Some(cli.project.clone()), settings));
    let addr: SocketAddr = bind.parse().with_context(|| format!("bad address {bind:?}"))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        tracing::info!("serving on http://{}", listener.local_addr()?);
        axum::serve(listener, router(wb, static_dir)).await?;
        Ok(())
    })
}
