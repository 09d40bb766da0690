mod common;

use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::Arc;

use serde_json::{json, Value};

use decathlon::gateway::cli::{EXIT_DATA, EXIT_OK, EXIT_USAGE};
use decathlon::gateway::server::serve_listener;
use decathlon::gateway::{run, Api, ApiConfig};
use decathlon::inference::{save_fit, Family, FitResult};
use decathlon::synthetic::typical_scales;

fn point_fit(family: Family) -> (FitResult, Vec<String>) {
    let w = common::world(Family::Compositional, 12, 60, 1);
    let truth = match family {
        Family::Compositional => w.truth.clone(),
        Family::Simple => common::as_simple(&w.truth),
        Family::Baseline => {
            let mut t = w.truth.clone();
            t.spec = decathlon::inference::ModelSpec::with_basis(Family::Baseline, t.spec.basis.clone());
            t.blocks.retain(|b| b.target == decathlon::inference::Target::Points);
            t
        }
    };
    (truth.point_mass_fit(&w.design.athletes, &typical_scales(), 200), w.design.athletes)
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("decathlon").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn fixture(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn cli_exit_codes() {
    let (code, out, _) = cli(&["score", &fixture("world_record_marks.csv")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("12676"), "{out}");

    let (code, out, _) = cli(&["score", "--json", &fixture("zero_points_marks.csv")]);
    assert_eq!(code, EXIT_OK);
    let rows: Value = serde_json::from_str(&out).unwrap();
    assert!(rows.as_array().unwrap().iter().all(|r| r["total"] == 0));

    assert_eq!(cli(&[]).0, EXIT_USAGE);
    assert_eq!(cli(&["fit", "--data", "x.csv"]).0, EXIT_USAGE);
    assert_eq!(cli(&["score", "/nonexistent/marks.csv"]).0, EXIT_DATA);

    let dir = tempfile::tempdir().unwrap();
    let (fit, athletes) = point_fit(Family::Compositional);
    save_fit(&fit, dir.path()).unwrap();
    let path = dir.path().to_str().unwrap();
    assert_eq!(cli(&["simulate", "--fit", path, "--preset", "nobody", "--seed", "1"]).0, EXIT_USAGE);
    assert_eq!(cli(&["simulate", "--fit", path, "--athlete", "nobody", "--seed", "1"]).0, EXIT_DATA);
    let (code, out, _) = cli(&["simulate", "--fit", path, "--athlete", &athletes[0], "--seed", "1", "--draws", "50"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("seed 1"), "{out}");
    let (code, out, _) = cli(&["profile", "--fit", path, "--athlete", &athletes[1], "--json"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap().as_array().unwrap().len(), 1);
}

fn make_api(family: Family) -> Api {
    Api::new(point_fit(family).0, ApiConfig::default()).unwrap()
}

#[test]
fn api_statuses() {
    let api = make_api(Family::Compositional);
    let body = |v: Value| serde_json::to_vec(&v).unwrap();
    assert_eq!(api.handle("GET", "/healthz", b"").status, 200);
    assert_eq!(api.handle("GET", "/events", b"").json_body().as_array().unwrap().len(), 10);
    assert_eq!(api.handle("GET", "/nowhere", b"").status, 404);
    assert_eq!(api.handle("GET", "/athletes/nobody/profile", b"").status, 404);
    assert_eq!(api.handle("GET", "/simulate", b"").status, 405);
    assert_eq!(api.handle("POST", "/simulate", b"{not json").status, 400);
    assert_eq!(api.handle("POST", "/simulate", &body(json!({ "quantiles": vec![0.5; 11] }))).status, 400);
    assert_eq!(api.handle("POST", "/simulate", &body(json!({ "quantiles": vec![1.5; 10] }))).status, 400);
    assert_eq!(api.handle("POST", "/simulate", &body(json!({ "quantiles": vec![0.5; 10], "extra": 1 }))).status, 400);

    let request = body(json!({ "quantiles": vec![0.9; 10], "seed": 3, "threshold": 8000 }));
    let a = api.handle("POST", "/simulate", &request);
    let b = api.handle("POST", "/simulate", &request);
    assert_eq!(a.status, 200);
    assert_eq!(a.body, b.body);
    let summary = a.json_body();
    assert_eq!(summary["n_draws"], 200);
    assert_eq!(summary["threshold"], 8000.0);

    let athlete = api.fit().athletes()[0].clone();
    let profile = api.handle("GET", &format!("/athletes/{athlete}/profile"), b"");
    assert_eq!(profile.status, 200);
    assert_eq!(profile.json_body()["quantiles"].as_array().unwrap().len(), 10);
    let curve = api.handle("GET", &format!("/athletes/{athlete}/age-curve?from=20&to=22&step=1&seed=2"), b"");
    assert_eq!(curve.status, 200);
    assert_eq!(curve.json_body()["points"].as_array().unwrap().len(), 3);
    assert_eq!(api.handle("GET", &format!("/athletes/{athlete}/age-curve?step=abc"), b"").status, 400);

    let tight = Api::new(point_fit(Family::Compositional).0, ApiConfig { budget: 100, ..ApiConfig::default() }).unwrap();
    assert_eq!(tight.handle("POST", "/simulate", &body(json!({ "quantiles": vec![0.5; 10] }))).status, 422);

    let baseline = make_api(Family::Baseline);
    assert_eq!(baseline.handle("POST", "/simulate", &body(json!({ "quantiles": vec![0.5; 10] }))).status, 422);
    assert_eq!(baseline.handle("GET", "/healthz", b"").status, 200);
}

#[test]
fn http_round_trip() {
    let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(1).enable_all().build().unwrap();
    let listener = runtime.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    runtime.spawn(serve_listener(Arc::new(make_api(Family::Compositional)), listener));

    let request = |raw: String| -> String {
        let mut stream = TcpStream::connect(addr).unwrap();
        stream.write_all(raw.as_bytes()).unwrap();
        let mut response = String::new();
        stream.read_to_string(&mut response).unwrap();
        response
    };
    let health = request(format!("GET /healthz HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"));
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    let json: Value = serde_json::from_str(health.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert_eq!(json["status"], "ok");

    let body = r#"{"quantiles":[0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5]}"#;
    let bad = request(format!(
        "POST /simulate HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    ));
    assert!(bad.starts_with("HTTP/1.1 400"), "{bad}");
    assert!(bad.contains("\"error\""));
    runtime.shutdown_background();
}
