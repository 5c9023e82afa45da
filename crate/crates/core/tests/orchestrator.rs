mod common;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use ventplan::orchestrator::{
    router, run_with_progress, JobError, JobService, JobState, RunConfig, Source, Stage,
};
use ventplan::report::{emit_report, parse_report_json, ReportFormat};
use ventplan::solver::SolveStatus;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn tiny_config() -> RunConfig {
    RunConfig::load(fixtures().join("tiny_run.json")).unwrap().0
}

fn slow_config() -> RunConfig {
    let mut c = tiny_config();
    c.scenario_count = Some(400);
    c
}

#[test]
fn tiny_pipeline_runs_and_conserves() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = tiny_config();
    config.output.dir = Some(dir.path().to_path_buf());
    let seen = std::sync::Mutex::new(Vec::new());
    let out = run_with_progress(&config, &fixtures(), &|p| seen.lock().unwrap().push(p.solved)).unwrap();

    assert_eq!(out.report.metadata.status, SolveStatus::Optimal);
    assert_eq!(out.report.plans.len(), 2);
    for plan in &out.report.plans {
        assert!(common::conservation_error(&out.instance, plan) < 1e-6);
    }
    let seen = seen.into_inner().unwrap();
    assert_eq!(seen.first(), Some(&0));
    assert_eq!(seen.iter().max(), Some(&2));

    for file in ["config.json", "scenarios.json", "report.json", "flows.csv", "daily.csv"] {
        assert!(dir.path().join(file).exists(), "{file} missing");
    }
    let saved = parse_report_json(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(saved, out.report);
}

#[test]
fn missing_forecast_fails_at_ingestion() {
    let mut config = tiny_config();
    config.forecast = Some(Source::Path("no_such_forecast.csv".into()));
    let err = run_with_progress(&config, &fixtures(), &|_| {}).unwrap_err();
    assert_eq!(err.stage, Stage::Ingestion);
    assert!(err.to_string().contains("no_such_forecast.csv"), "{err}");
}

#[test]
fn bad_config_fails_at_config_stage() {
    let mut config = tiny_config();
    config.scenario_count = Some(0);
    let err = run_with_progress(&config, &fixtures(), &|_| {}).unwrap_err();
    assert_eq!(err.stage, Stage::Config);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let config = tiny_config();
    let a = run_with_progress(&config, &fixtures(), &|_| {}).unwrap();
    let b = run_with_progress(&config, &fixtures(), &|_| {}).unwrap();
    assert_eq!(
        emit_report(&a.report, ReportFormat::Json).unwrap(),
        emit_report(&b.report, ReportFormat::Json).unwrap()
    );
    assert_eq!(a.scenarios.to_json(), b.scenarios.to_json());
}

#[test]
fn config_json_round_trips() {
    let config = tiny_config();
    let back = RunConfig::from_json(&config.to_json()).unwrap();
    assert_eq!(back.to_json(), config.to_json());
}

#[test]
fn job_lifecycle() {
    let root = tempfile::tempdir().unwrap();
    let service = JobService::new(root.path(), fixtures(), 1).unwrap();

    let blocker = service.submit_job(slow_config()).unwrap();
    let id = service.submit_job(tiny_config()).unwrap();
    assert_ne!(blocker, id);

    match service.job_result(&id) {
        Err(JobError::NotReady { state, .. }) => assert_eq!(state, JobState::Queued),
        other => panic!("expected NotReady, got {other:?}"),
    }
    assert!(matches!(service.job_status("nope"), Err(JobError::UnknownId(_))));

    let record = service.wait(&id, Duration::from_secs(300)).unwrap();
    assert_eq!(record.state, JobState::Done, "{:?}", record.error);
    assert_eq!(record.progress.solved, record.progress.total);
    assert!(record.started_at.unwrap() >= record.submitted_at);
    assert!(record.finished_at.unwrap() >= record.started_at.unwrap());

    let report = service.job_result(&id).unwrap();
    assert_eq!(report.plans.len(), 2);
    let dir = root.path().join(&id);
    for file in ["job.json", "config.json", "report.json", "log.txt"] {
        assert!(dir.join(file).exists(), "{file} missing");
    }
    let persisted: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("job.json")).unwrap()).unwrap();
    assert_eq!(persisted["state"], "Done");
    assert_eq!(service.wait(&blocker, Duration::from_secs(300)).unwrap().state, JobState::Done);
    assert_eq!(service.list_jobs().len(), 2);
}

#[test]
fn failed_job_reports_error() {
    let root = tempfile::tempdir().unwrap();
    let service = JobService::new(root.path(), fixtures(), 1).unwrap();
    let mut config = tiny_config();
    config.forecast = Some(Source::Path("missing.csv".into()));
    let id = service.submit_job(config).unwrap();
    let record = service.wait(&id, Duration::from_secs(60)).unwrap();
    assert_eq!(record.state, JobState::Failed);
    assert!(record.error.unwrap().starts_with("ingestion"));
    assert!(matches!(service.job_result(&id), Err(JobError::Failed { .. })));
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Body) -> (StatusCode, serde_json::Value) {
    let response = app
        .clone()
        .oneshot(Request::builder().method(method).uri(uri).body(body).unwrap())
        .await
        .unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::test]
async fn http_routes() {
    let root = tempfile::tempdir().unwrap();
    let service = Arc::new(JobService::new(root.path(), fixtures(), 1).unwrap());
    let app = router(Arc::clone(&service));

    let (status, cases) = call(&app, "GET", "/meta/cases", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(cases["schema_version"], 1);
    let labels: Vec<&str> = cases["cases"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["I", "II", "III", "IV"]);

    let (status, _) = call(&app, "POST", "/jobs", Body::from("{not json")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "GET", "/jobs/unknown", Body::empty()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let blocker = service.submit_job(slow_config()).unwrap();
    let (status, accepted) = call(&app, "POST", "/jobs", Body::from(tiny_config().to_json())).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert_eq!(accepted["schema_version"], 1);
    let id = accepted["id"].as_str().unwrap().to_owned();

    let (status, _) = call(&app, "GET", &format!("/jobs/{id}/report"), Body::empty()).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let waiter = Arc::clone(&service);
    let wait_id = id.clone();
    tokio::task::spawn_blocking(move || waiter.wait(&wait_id, Duration::from_secs(300)))
        .await
        .unwrap()
        .unwrap();

    let (status, record) = call(&app, "GET", &format!("/jobs/{id}"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(record["schema_version"], 1);
    assert_eq!(record["state"], "Done");

    let (status, report) = call(&app, "GET", &format!("/jobs/{id}/report"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["schema_version"], 1);
    assert!(report["shortage"]["total"].as_f64().unwrap() >= 0.0);

    let (status, list) = call(&app, "GET", "/jobs", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list["jobs"].as_array().unwrap().len(), 2);
    service.wait(&blocker, Duration::from_secs(300)).unwrap();
}

#[test]
fn saved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = tiny_config();
    config.output.dir = Some(dir.path().to_path_buf());
    let first = run_with_progress(&config, &fixtures(), &|_| {}).unwrap();

    let (mut saved, base) = RunConfig::load(dir.path().join("config.json")).unwrap();
    saved.output.dir = None;
    let again = run_with_progress(&saved, &base, &|_| {}).unwrap();
    assert_eq!(again.report, first.report);
}
