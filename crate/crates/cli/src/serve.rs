//! HTTP API backing the review UI.
//!
//! | method | path                        | body / result                              |
//! |--------|-----------------------------|--------------------------------------------|
//! | GET    | `/api/session`              | plan, seed, progress, per-case verdicts    |
//! | GET    | `/api/cases/{id}`           | the four sections, references, judgment    |
//! | POST   | `/api/cases/{id}/judgment`  | `{verdict, note}` → updated progress       |
//! | GET    | `/api/report`               | report, or 400 with the missing count      |
//!
//! Everything else is served from the UI asset directory.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::{bail, Context};
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use olseg_core::model::{read_segmented_stream, SegmentedDecision};
use olseg_core::verification::{
    Judgment, Progress, SamplingPlan, SessionStore, Verdict, VerificationError,
};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

const PLACEHOLDER_UI: &str = include_str!("../assets/index.html");

pub struct ReviewState {
    store: Mutex<SessionStore>,
    cases: HashMap<i64, SegmentedDecision>,
}

impl ReviewState {
    /// Opens the session and loads the sampled decisions from the corpus.
    pub fn load(session: &Path, corpus: &Path) -> anyhow::Result<Self> {
        let store = SessionStore::open(session)?;
        let wanted = &store.session().sampled_ids;
        let file =
            File::open(corpus).with_context(|| format!("cannot open {}", corpus.display()))?;
        let mut cases = HashMap::with_capacity(wanted.len());
        for rec in read_segmented_stream(BufReader::new(file)) {
            let rec = rec.with_context(|| format!("reading {}", corpus.display()))?;
            if store.session().contains(rec.id) {
                cases.insert(rec.id, rec);
            }
        }
        let missing = wanted.iter().filter(|id| !cases.contains_key(id)).count();
        if missing > 0 {
            bail!(
                "{missing} sampled decisions are not in {}",
                corpus.display()
            );
        }
        Ok(ReviewState {
            store: Mutex::new(store),
            cases,
        })
    }

    fn store(&self) -> std::sync::MutexGuard<'_, SessionStore> {
        self.store.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Serialize, Deserialize)]
pub struct CaseStatus {
    pub id: i64,
    pub verdict: Option<Verdict>,
}

#[derive(Serialize, Deserialize)]
pub struct SessionView {
    pub plan: SamplingPlan,
    pub seed: u64,
    pub progress: Progress,
    pub cases: Vec<CaseStatus>,
}

#[derive(Serialize, Deserialize)]
pub struct CaseView {
    #[serde(flatten)]
    pub decision: SegmentedDecision,
    pub judgment: Option<Judgment>,
}

#[derive(Serialize, Deserialize)]
pub struct JudgmentRequest {
    pub verdict: Verdict,
    #[serde(default)]
    pub note: String,
}

#[derive(Serialize, Deserialize)]
pub struct JudgmentResponse {
    pub id: i64,
    pub judgment: Judgment,
    pub progress: Progress,
}

#[derive(Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missing: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missing_ids: Option<Vec<i64>>,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    let body = ApiError {
        error: msg.into(),
        missing: None,
        missing_ids: None,
    };
    (status, Json(body)).into_response()
}

async fn session(State(st): State<Arc<ReviewState>>) -> Json<SessionView> {
    let store = st.store();
    let s = store.session();
    Json(SessionView {
        plan: s.plan.clone(),
        seed: s.seed,
        progress: s.progress(),
        cases: s
            .sampled_ids
            .iter()
            .map(|&id| CaseStatus {
                id,
                verdict: s.judgments.get(&id).map(|j| j.verdict),
            })
            .collect(),
    })
}

async fn case(State(st): State<Arc<ReviewState>>, UrlPath(id): UrlPath<i64>) -> Response {
    let Some(decision) = st.cases.get(&id) else {
        return error(
            StatusCode::NOT_FOUND,
            format!("decision {id} is not part of the sample"),
        );
    };
    let judgment = st.store().session().judgments.get(&id).cloned();
    Json(CaseView {
        decision: decision.clone(),
        judgment,
    })
    .into_response()
}

async fn judge(
    State(st): State<Arc<ReviewState>>,
    UrlPath(id): UrlPath<i64>,
    Json(req): Json<JudgmentRequest>,
) -> Response {
    let result = tokio::task::spawn_blocking(move || {
        let mut store = st.store();
        store.record_judgment(id, req.verdict, &req.note)?;
        let s = store.session();
        Ok::<_, VerificationError>(JudgmentResponse {
            id,
            judgment: s.judgments[&id].clone(),
            progress: s.progress(),
        })
    })
    .await;
    match result {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err(e @ VerificationError::UnknownId(_))) => error(StatusCode::NOT_FOUND, e.to_string()),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn report(State(st): State<Arc<ReviewState>>) -> Response {
    match st.store().session().report() {
        Ok(r) => Json(r).into_response(),
        Err(e @ VerificationError::Incomplete { .. }) => {
            let VerificationError::Incomplete {
                missing,
                ref missing_ids,
                ..
            } = e
            else {
                unreachable!()
            };
            let body = ApiError {
                error: e.to_string(),
                missing: Some(missing),
                missing_ids: Some(missing_ids.clone()),
            };
            (StatusCode::BAD_REQUEST, Json(body)).into_response()
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn placeholder_ui() -> Html<&'static str> {
    Html(PLACEHOLDER_UI)
}

pub fn router(state: Arc<ReviewState>, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/session", get(session))
        .route("/api/cases/{id}", get(case))
        .route("/api/cases/{id}/judgment", post(judge))
        .route("/api/report", get(report))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(placeholder_ui)),
    }
}

/// Binds `addr` and serves until the process is interrupted.
pub async fn run(state: ReviewState, assets: Option<PathBuf>, addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("cannot listen on {addr} (port in use?)"))?;
    log::info!("review server on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state), assets))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
