use std::path::{Path, PathBuf};
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use drjudge_service::config::PipelineConfig;
use drjudge_service::http::{router, AppState};
use drjudge_service::store::Store;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

fn fixture_config() -> PipelineConfig {
    PipelineConfig::load(&fixtures().join("pipeline.toml")).unwrap()
}

fn app(root: &Path) -> Router {
    router(AppState::new(Store::open(root).unwrap(), fixture_config()).unwrap())
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Body>, json_body: bool) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if json_body {
        req = req.header("content-type", "application/json");
    }
    let resp = app.clone().oneshot(req.body(body.unwrap_or_else(Body::empty)).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    call(app, Method::GET, uri, None, false).await
}

async fn post_json(app: &Router, uri: &str, v: &Value) -> (StatusCode, Vec<u8>) {
    call(app, Method::POST, uri, Some(Body::from(v.to_string())), true).await
}

fn parse(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

fn trial(id: &str, hearts: [u32; 8]) -> Value {
    let shown: Vec<String> = ["pca", "mds", "isomap-k8", "isomap-k15", "grp-s1", "grp-s2", "tsne-p10-i300-lr200-s1", "tsne-p30-i300-lr200-s1"]
        .iter()
        .map(|s| format!("blobs.{s}"))
        .collect();
    json!({
        "trial_id": id,
        "user_id": "u1",
        "dataset_id": "blobs",
        "shown": shown,
        "hearts": hearts,
        "crossed_out": [false, false, false, false, false, false, false, true],
        "difficulty": "easy",
        "timestamp": "2024-03-01T12:00:00Z"
    })
}

fn run_cli(root: &Path) {
    let cfg = fixtures().join("pipeline.toml");
    let code = drjudge_service::cli::main_with([
        "drjudge",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        root.to_str().unwrap(),
        "run",
    ]);
    assert_eq!(code, 0);
}

#[tokio::test(flavor = "multi_thread")]
async fn trial_budget_violation_names_the_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, body) = post_json(&app, "/trials", &trial("t-over", [4, 4, 4, 4, 0, 0, 0, 0])).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(parse(&body)["constraint"], "heart_budget");

    let (status, body) = post_json(&app, "/trials", &trial("t-ok", [3, 2, 1, 0, 0, 0, 0, 0])).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(parse(&body)["trial_id"], "t-ok");

    let (status, _) = post_json(&app, "/trials", &trial("t-ok", [3, 2, 1, 0, 0, 0, 0, 0])).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test(flavor = "multi_thread")]
async fn missing_resources_are_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    assert_eq!(get(&app, "/rankings/blobs").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/datasets/blobs/metrics").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/jobs/7").await.0, StatusCode::NOT_FOUND);
    let (status, body) = get(&app, "/datasets").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(parse(&body), json!([]));
}

#[tokio::test(flavor = "multi_thread")]
async fn rank_over_http_matches_cli() {
    let dir = tempfile::tempdir().unwrap();
    run_cli(dir.path());
    let cli_bytes = std::fs::read(dir.path().join("rankings/blobs.json")).unwrap();
    std::fs::remove_file(dir.path().join("rankings/blobs.json")).unwrap();

    let app = app(dir.path());
    assert_eq!(get(&app, "/rankings/blobs").await.0, StatusCode::NOT_FOUND);
    let (status, posted) = post_json(&app, "/rank", &json!({"dataset_id": "blobs", "model_id": "ranker"})).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&posted));
    assert_eq!(posted, cli_bytes);
    let (status, fetched) = get(&app, "/rankings/blobs").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(fetched, cli_bytes);

    let (status, _) = post_json(&app, "/rank", &json!({"dataset_id": "blobs", "model_id": "nope"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, body) = get(&app, "/metamap/blobs").await;
    assert_eq!(status, StatusCode::OK);
    assert!(parse(&body).is_object());
    let (status, _) = get(&app, "/metamap/blobs?model_id=forest").await;
    assert_eq!(status, StatusCode::OK);
}

fn unlabeled_csv() -> String {
    let mut s = String::from("x0,x1,x2\n");
    for i in 0..40 {
        let t = i as f64 * 0.3;
        s.push_str(&format!("{},{},{}\n", t.cos(), t.sin(), 0.05 * t));
    }
    s
}

async fn wait_for(app: &Router, job: u64) -> Value {
    for _ in 0..600 {
        let (status, body) = get(app, &format!("/jobs/{job}")).await;
        assert_eq!(status, StatusCode::OK);
        let v = parse(&body);
        if v["state"] == "done" || v["state"] == "failed" {
            return v;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("job {job} did not finish");
}

#[tokio::test(flavor = "multi_thread")]
async fn upload_project_and_fetch_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let upload = || Some(Body::from(unlabeled_csv()));
    let (status, body) = call(&app, Method::POST, "/datasets?id=helix", upload(), false).await;
    assert_eq!(status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&body));
    let (status, _) = call(&app, Method::POST, "/datasets?id=helix", upload(), false).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = call(&app, Method::POST, "/datasets?id=../x", upload(), false).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    assert_eq!(get(&app, "/datasets/helix/metrics").await.0, StatusCode::NOT_FOUND);
    let (status, _) = post_json(&app, "/datasets/helix/projections", &json!({"metrics": ["dsc"]})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let req = json!({"generators": [{"technique": "PCA"}, {"technique": "MDS"}]});
    let (status, body) = post_json(&app, "/datasets/helix/projections", &req).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let job = parse(&body)["job_id"].as_u64().unwrap();
    let done = wait_for(&app, job).await;
    assert_eq!(done["state"], "done", "{done}");
    assert_eq!(done["progress"], 1.0);

    let (status, body) = get(&app, "/datasets/helix/metrics").await;
    assert_eq!(status, StatusCode::OK);
    let v = parse(&body);
    let rows = v.as_array().expect("metric rows");
    assert_eq!(rows.len(), 2);

    let (status, body) = get(&app, "/datasets").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(parse(&body)[0]["labeled"], false);
}
