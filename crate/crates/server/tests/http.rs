use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use rosarch_core::api;
use rosarch_server::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

async fn call(method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = router(AppState::default()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

#[tokio::test]
async fn health_reports_version() {
    let (status, body) = call("GET", api::HEALTH, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["version"], env!("CARGO_PKG_VERSION"));
}

#[tokio::test]
async fn stages_chain_over_http() {
    let out = tempfile::tempdir().unwrap();
    let repo = fixture("nested/repo");
    let (status, body) = call("POST", api::EXTRACT, Some(json!({"repo": repo, "out": out.path()}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["result"]["list_packages"].as_array().unwrap().len(), 2);

    let (status, body) = call("POST", api::LAUNCH_GRAPH, Some(json!({"repo": repo, "out": out.path()}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["result"]["roots"], json!(["lf1"]));

    let (status, body) = call("POST", api::SYNTHESIZE, Some(json!({"out": out.path()}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["result"]["relations"].as_array().unwrap().len(), 6);

    let (status, body) = call(
        "POST",
        api::EVALUATE,
        Some(json!({"recovered": out.path(), "reference": fixture("nested/reference")})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    for level in body["result"]["macro"].as_array().unwrap() {
        assert_eq!(level["f1"], 1.0);
    }

    let (status, body) = call(
        "POST",
        api::PROMPT,
        Some(json!({"template": "node_description", "out": out.path()})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert!(body["result"]["prompt"].as_str().unwrap().contains("ExampleTwoNode"));
}

#[tokio::test]
async fn input_errors_are_400() {
    let out = tempfile::tempdir().unwrap();
    let (status, body) = call("POST", api::SYNTHESIZE, Some(json!({"out": out.path()}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["class"], "input");
    assert!(body["message"].as_str().unwrap().contains("extract"));

    let (status, body) = call("POST", api::RESOLVE_NAME, Some(json!({"name": "a//b", "node_name": "n"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["class"], "input");

    let (status, _) = call("POST", api::PIPELINE, Some(json!({"repo_root": "/no/such/repo", "out_dir": out.path()}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn analysis_errors_are_422() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.puml");
    std::fs::write(&bad, "@startuml\n}\n@enduml\n").unwrap();
    let (status, body) = call(
        "POST",
        api::EVALUATE,
        Some(json!({"recovered": bad, "reference": fixture("nested/reference")})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["class"], "analysis");
}

#[tokio::test]
async fn resolve_name_reports_both_forms() {
    let (status, body) = call(
        "POST",
        api::RESOLVE_NAME,
        Some(json!({
            "name": "~/status",
            "namespace": "/backup",
            "node_name": "Tom",
            "remappings": [{"from": "~/status", "to": "/tom"}]
        })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["result"], json!({"resolved": "/backup/Tom/status", "remapped": "/tom"}));
}

#[tokio::test]
async fn pipeline_returns_the_report_and_manifest() {
    let out = tempfile::tempdir().unwrap();
    let (status, body) = call(
        "POST",
        api::PIPELINE,
        Some(json!({"repo_root": fixture("brickbybrick/repo"), "out_dir": out.path()})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["manifest"]["status"], "ok");
    assert_eq!(body["error_class"], Value::Null);
    let paths: Vec<&str> = body["manifest"]["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["path"].as_str().unwrap())
        .collect();
    assert!(paths.contains(&"ccd/system.puml"));
    assert_eq!(paths.iter().filter(|p| p.starts_with("acd/")).count(), 10);
    assert!(out.path().join("manifest.json").is_file());
}

#[tokio::test]
async fn unknown_route_is_404() {
    let (status, _) = call("GET", "/v1/nothing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
