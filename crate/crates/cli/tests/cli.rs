use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use scorelens::bundle;
use scorelens_cli::server::{router, HEALTH_BODY};
use tower::ServiceExt;

fn sample(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples").join(format!("{name}.musicxml"))
}

fn scorelens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scorelens")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn analyze_writes_a_valid_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.json");
    let run = scorelens(&["analyze", s(&sample("sections_tab")), "-o", s(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    let b = bundle::deserialize(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(b.format_version, 1);
    assert_eq!(b.analysis.levels.bar.count, 8);
}

#[test]
fn analyze_without_out_writes_to_stdout() {
    let run = scorelens(&["analyze", s(&sample("empty_bars"))]);
    assert_eq!(run.status.code(), Some(0));
    assert!(bundle::deserialize(&run.stdout).is_ok());
}

#[test]
fn missing_input_is_an_io_error() {
    let run = scorelens(&["analyze", "/nonexistent/score.musicxml"]);
    assert_eq!(run.status.code(), Some(3));
}

#[test]
fn malformed_xml_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.musicxml");
    std::fs::write(&bad, "<score-partwise><part>").unwrap();
    let run = scorelens(&["analyze", s(&bad)]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("MalformedXml"), "{}", stderr(&run));
}

#[test]
fn bad_flags_are_usage_errors() {
    let input = sample("chords_ties");
    for args in [
        vec!["render", s(&input), "--color", "direct:99"],
        vec!["render", s(&input), "--color", "rainbow"],
        vec!["render", s(&input), "--scale", "jet"],
        vec!["render", s(&input), "--notes", "tab-simple"],
        vec!["render", s(&input), "--threshold", "-1"],
        vec!["analyze", s(&input), "--track", "7"],
        vec!["frobnicate"],
    ] {
        assert_eq!(scorelens(&args).status.code(), Some(4), "{args:?}");
    }
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(scorelens(&["--help"]).status.code(), Some(0));
}

#[test]
fn render_is_deterministic_and_accepts_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let input = sample("sections_tab");
    let b = dir.path().join("b.json");
    assert_eq!(scorelens(&["analyze", s(&input), "-o", s(&b)]).status.code(), Some(0));
    let from_score = scorelens(&["render", s(&input), "--view", "compressed", "--color", "cluster"]);
    let again = scorelens(&["render", s(&input), "--view", "compressed", "--color", "cluster"]);
    let from_bundle = scorelens(&["render", s(&b), "--view", "compressed", "--color", "cluster"]);
    assert_eq!(from_score.status.code(), Some(0), "{}", stderr(&from_score));
    assert!(from_score.stdout.starts_with(b"<svg"));
    assert_eq!(from_score.stdout, again.stdout);
    assert_eq!(from_score.stdout, from_bundle.stdout);
}

#[test]
fn bundle_track_must_match() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("b.json");
    assert_eq!(scorelens(&["analyze", s(&sample("chords_ties")), "--track", "1", "-o", s(&b)]).status.code(), Some(0));
    assert_eq!(scorelens(&["render", s(&b), "--track", "1"]).status.code(), Some(0));
    assert_eq!(scorelens(&["render", s(&b), "--track", "0"]).status.code(), Some(4));
}

#[test]
fn corrupt_bundle_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("b.json");
    std::fs::write(&b, r#"{"formatVersion": 2}"#).unwrap();
    let run = scorelens(&["render", s(&b)]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn serve_reports_a_busy_port() {
    let listener = TcpListener::bind("0.0.0.0:0").unwrap();
    let port = listener.local_addr().unwrap().port().to_string();
    let run = scorelens(&["serve", s(&sample("empty_bars")), "--port", &port]);
    assert_eq!(run.status.code(), Some(5), "{}", stderr(&run));
}

fn app() -> (axum::Router, Vec<u8>) {
    let bytes = std::fs::read(sample("chords_ties")).unwrap();
    let parsed = scorelens::parse_score(&bytes, &Default::default()).unwrap();
    let bytes = bundle::serialize(&bundle::build_bundle(&parsed.score, 0).unwrap());
    (router(bytes.clone(), None), bytes)
}

async fn get(app: axum::Router, uri: &str) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let response = app.oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
    let (parts, body) = response.into_parts();
    let body = axum::body::to_bytes(body, usize::MAX).await.unwrap();
    (parts.status, parts.headers, body.to_vec())
}

#[tokio::test]
async fn health_endpoint() {
    let (status, headers, body) = get(app().0, "/api/health").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, HEALTH_BODY.as_bytes());
    assert_eq!(headers["content-type"], "application/json");
    assert_eq!(headers["access-control-allow-origin"], "*");
}

#[tokio::test]
async fn bundle_endpoint_serves_the_analysis() {
    let (app, bytes) = app();
    let (status, headers, body) = get(app, "/api/bundle").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(headers["content-type"], "application/json");
    assert_eq!(body, bytes);
    let b = bundle::deserialize(&body).unwrap();
    assert_eq!(b.score.tracks.len(), 2);
}

#[tokio::test]
async fn unknown_paths_are_not_found() {
    let (status, headers, _) = get(app().0, "/nope.js").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(headers["access-control-allow-origin"], "*");
    let (status, _, body) = get(app().0, "/").await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("/api/bundle"));
}

#[tokio::test]
async fn static_assets_are_served_from_the_asset_dir() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>viewer</h1>").unwrap();
    std::fs::write(dir.path().join("app.js"), "1").unwrap();
    let app = router(b"{}".to_vec(), Some(dir.path().to_path_buf()));
    let (status, headers, body) = get(app.clone(), "/").await;
    assert_eq!((status, body.as_slice()), (StatusCode::OK, b"<h1>viewer</h1>".as_slice()));
    assert_eq!(headers["content-type"], "text/html; charset=utf-8");
    let (_, headers, _) = get(app.clone(), "/app.js").await;
    assert_eq!(headers["content-type"], "text/javascript");
    let (status, _, _) = get(app, "/../Cargo.toml").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn serve_answers_over_http() {
    use std::io::{Read, Write};
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let mut child = Command::new(env!("CARGO_BIN_EXE_scorelens"))
        .args(["serve", s(&sample("empty_bars")), "--port", &port.to_string()])
        .spawn()
        .unwrap();
    let mut response = String::new();
    for _ in 0..100 {
        if let Ok(mut stream) = std::net::TcpStream::connect(("127.0.0.1", port)) {
            stream.write_all(b"GET /api/health HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
            stream.read_to_string(&mut response).unwrap();
            break;
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.ends_with(HEALTH_BODY), "{response}");
}
