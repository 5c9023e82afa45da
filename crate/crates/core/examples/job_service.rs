//! Run the HTTP job service in-process, submit the fixture config over HTTP,
//! poll until it finishes and fetch the report.
//!
//! ```bash
//! cargo run --example job_service
//! ```

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use tower::ServiceExt;

use ventplan::orchestrator::{router, JobService, RunConfig};

async fn send(app: &axum::Router, method: &str, uri: &str, body: String) -> serde_json::Value {
    let request = Request::builder().method(method).uri(uri).body(Body::from(body)).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    serde_json::from_slice(&bytes).unwrap()
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let runs = tempfile::tempdir()?;
    let service = Arc::new(JobService::new(runs.path(), &fixtures, 2)?);
    let app = router(service);

    let cases = send(&app, "GET", "/meta/cases", String::new()).await;
    for case in cases["cases"].as_array().unwrap() {
        println!("case {}: {}", case["label"], case["name"]);
    }

    let (config, _) = RunConfig::load(fixtures.join("tiny_run.json"))?;
    let accepted = send(&app, "POST", "/jobs", config.to_json()).await;
    let id = accepted["id"].as_str().unwrap().to_owned();
    println!("submitted job {id}");

    loop {
        let record = send(&app, "GET", &format!("/jobs/{id}"), String::new()).await;
        println!("  {} {}/{}", record["state"], record["progress"]["solved"], record["progress"]["total"]);
        if record["state"] == "Done" || record["state"] == "Failed" {
            break;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }

    let report = send(&app, "GET", &format!("/jobs/{id}/report"), String::new()).await;
    println!("total shortage {}", report["shortage"]["total"]);
    println!("job files in {}", runs.path().join(&id).display());
    Ok(())
}
