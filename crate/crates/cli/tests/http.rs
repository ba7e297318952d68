use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use prospect_core::project::Project;
use prospect_core::service::{Settings, Workbench};
use prospect_core::store;
use prospect_core::synthetic::reference_project;
use prospect_cli::server::router;

async fn call(app: &Router, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or(Value::Null)
    };
    (status, value)
}

async fn login(app: &Router, actor: &str, role: &str) -> String {
    let (status, v) = call(app, "POST", "/sessions", None, Some(json!({"actor": actor, "role": role}))).await;
    assert_eq!(status, StatusCode::CREATED);
    v["token"].as_str().unwrap().to_owned()
}

fn app_with(project: Project, path: Option<std::path::PathBuf>) -> (Router, Arc<Workbench>) {
    let wb = Arc::new(Workbench::new(project, path, Settings::default()));
    (router(wb.clone(), None), wb)
}

async fn top_suggestion(app: &Router) -> String {
    let (status, v) = call(app, "GET", "/suggestions?limit=5", None, None).await;
    assert_eq!(status, StatusCode::OK);
    v["suggestions"][0]["id"].as_str().unwrap().to_owned()
}

#[tokio::test]
async fn accepting_a_suggestion_advances_the_journal_and_persists() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let project = reference_project();
    let seq = project.seq();
    let (app, _) = app_with(project, Some(path.clone()));
    let fac = login(&app, "ana", "facilitator").await;
    let id = top_suggestion(&app).await;

    let (status, v) = call(&app, "POST", &format!("/suggestions/{id}/accept"), Some(&fac), None).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["seq"], seq + 1);
    assert_eq!(v["record"]["actor"], "ana");

    let saved = store::load(&path).unwrap();
    assert_eq!(saved.seq(), seq + 1);
    let (_, ontology) = call(&app, "GET", "/ontology", None, None).await;
    let replayed = Project::replay(saved.journal()).unwrap();
    assert_eq!(ontology, serde_json::to_value(&replayed.state().ontology).unwrap());
}

#[tokio::test]
async fn stakeholders_cannot_decide_for_the_facilitator() {
    let (app, _) = app_with(reference_project(), None);
    let sh = login(&app, "s01", "stakeholder").await;
    let id = top_suggestion(&app).await;
    let (status, v) = call(&app, "POST", &format!("/suggestions/{id}/accept"), Some(&sh), None).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(v["error"], "forbidden");

    let (status, _) = call(&app, "POST", &format!("/suggestions/{id}/accept"), None, None).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn double_accept_gives_one_success_and_one_conflict() {
    let (app, wb) = app_with(reference_project(), None);
    let a = login(&app, "ana", "facilitator").await;
    let b = login(&app, "ben", "facilitator").await;
    let id = top_suggestion(&app).await;
    let uri = format!("/suggestions/{id}/accept");
    let (r1, r2) = tokio::join!(
        call(&app, "POST", &uri, Some(&a), None),
        call(&app, "POST", &uri, Some(&b), None)
    );
    let mut statuses = [r1.0, r2.0];
    statuses.sort();
    assert_eq!(statuses, [StatusCode::OK, StatusCode::CONFLICT]);
    assert_eq!(wb.snapshot().seq(), reference_project().seq() + 1);
}

#[tokio::test]
async fn expected_sequence_header_is_checked() {
    let (app, _) = app_with(reference_project(), None);
    let fac = login(&app, "ana", "facilitator").await;
    let req = Request::builder()
        .method("POST")
        .uri("/actions")
        .header("x-session", &fac)
        .header("x-expected-seq", "1")
        .header("content-type", "application/json")
        .body(Body::from(
            json!({"action": "create_concept", "payload": {"id": "k900", "label": "odour"}}).to_string(),
        ))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::CONFLICT);
}

#[tokio::test]
async fn malformed_bodies_are_bad_requests() {
    let (app, _) = app_with(reference_project(), None);
    let fac = login(&app, "ana", "facilitator").await;
    let (status, v) = call(&app, "POST", "/actions", Some(&fac), Some(json!({"action": "fly"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "bad_request");
}

#[tokio::test]
async fn stakeholders_submit_their_own_ballots_and_arguments() {
    let (app, wb) = app_with(reference_project(), None);
    let sh = login(&app, "s01", "stakeholder").await;
    let ballot = |who: &str| {
        json!({"respondent_id": who, "round": 1,
               "chosen_variable_ids": ["V01", "V02", "V03", "V04", "V05"]})
    };
    let (status, _) = call(&app, "POST", "/ballots", Some(&sh), Some(ballot("s02"))).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (status, v) = call(&app, "POST", "/ballots", Some(&sh), Some(ballot("s01"))).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let (status, _) = call(&app, "POST", "/ballots", Some(&sh), Some(ballot("s01"))).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (_, ranking) = call(&app, "GET", "/delphi/ranking?round=1", None, None).await;
    assert_eq!(ranking["ballots"], 1);
    assert_eq!(ranking["counts"]["V01"], 1);

    let argument = json!({"id": "p999", "denomination": "odour", "value": "strong",
        "evaluation": "negative", "aim_id": "a001", "stakeholder_id": "s01", "weight": "1"});
    let (status, v) = call(&app, "POST", "/arguments", Some(&sh), Some(argument)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert!(wb.snapshot().state().mychoice.instances.contains_key("p999"));
}

#[tokio::test]
async fn read_endpoints_answer() {
    let (app, _) = app_with(reference_project(), None);
    for uri in [
        "/project",
        "/corpus",
        "/ontology",
        "/suggestions",
        "/matrix",
        "/scores",
        "/keys",
        "/delphi/questionnaire",
        "/delphi/ranking",
        "/attitudes",
        "/alignment/report",
        "/journal?since=10",
        "/openapi.json",
    ] {
        let (status, v) = call(&app, "GET", uri, None, None).await;
        assert_eq!(status, StatusCode::OK, "{uri}: {v}");
        assert!(!v.is_null(), "{uri}");
    }
    let (_, keys) = call(&app, "GET", "/keys?n_keys=4", None, None).await;
    assert_eq!(keys["keys"].as_array().unwrap().len(), 4);
    let (_, summary) = call(&app, "GET", "/project", None, None).await;
    assert_eq!(summary["godet"]["criteria"], 626);
    let (_, doc) = call(&app, "GET", "/openapi.json", None, None).await;
    assert!(doc["paths"]["/suggestions/{id}/accept"]["post"].is_object());
}
