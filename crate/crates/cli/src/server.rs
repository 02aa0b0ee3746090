//! HTTP endpoints for the viewer: the bundle, a health check and static assets.
//!
//! The bundle is analyzed once at startup and served as immutable bytes.

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use tokio::net::TcpListener;

use crate::{load_input, CliError, ServeArgs};

pub const HEALTH_BODY: &str = r#"{"status":"ok","formatVersion":1}"#;

const PLACEHOLDER_INDEX: &str = "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>scorelens</title></head>\
<body><p>The viewer is not installed. Start the server with <code>--assets DIR</code> to serve it; \
the analysis is available at <a href=\"/api/bundle\">/api/bundle</a>.</p></body></html>\n";

#[derive(Clone)]
struct AppState {
    bundle: Arc<Vec<u8>>,
    assets: Option<Arc<PathBuf>>,
}

/// Routes over canonical bundle bytes.
pub fn router(bundle: Vec<u8>, assets: Option<PathBuf>) -> Router {
    let state = AppState { bundle: Arc::new(bundle), assets: assets.map(Arc::new) };
    Router::new()
        .route("/api/bundle", get(get_bundle))
        .route("/api/health", get(health))
        .fallback(get(static_file))
        .layer(axum::middleware::map_response(allow_any_origin))
        .with_state(state)
}

async fn allow_any_origin(mut response: Response) -> Response {
    response.headers_mut().insert(header::ACCESS_CONTROL_ALLOW_ORIGIN, HeaderValue::from_static("*"));
    response
}

fn json(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

async fn get_bundle(State(state): State<AppState>) -> Response {
    json(state.bundle.as_ref().clone())
}

async fn health() -> Response {
    json(HEALTH_BODY.as_bytes().to_vec())
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript",
        "css" => "text/css",
        "json" | "map" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "wasm" => "application/wasm",
        "woff2" => "font/woff2",
        _ => "application/octet-stream",
    }
}

/// Relative path under the asset root, rejecting anything that could escape it.
fn asset_path(uri_path: &str) -> Option<PathBuf> {
    let trimmed = uri_path.trim_start_matches('/');
    let rel = Path::new(if trimmed.is_empty() { "index.html" } else { trimmed });
    rel.components().all(|c| matches!(c, Component::Normal(_))).then(|| rel.to_path_buf())
}

fn not_found() -> Response {
    (StatusCode::NOT_FOUND, "not found\n").into_response()
}

async fn static_file(State(state): State<AppState>, uri: Uri) -> Response {
    let Some(rel) = asset_path(uri.path()) else {
        return not_found();
    };
    let Some(root) = &state.assets else {
        return if rel == Path::new("index.html") {
            ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], PLACEHOLDER_INDEX).into_response()
        } else {
            not_found()
        };
    };
    let full = root.join(&rel);
    match tokio::fs::read(&full).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&rel))], Body::from(bytes)).into_response(),
        Err(_) => not_found(),
    }
}

/// Binds on all interfaces; port 0 picks a free port.
pub async fn bind(port: u16) -> Result<TcpListener, CliError> {
    TcpListener::bind(("0.0.0.0", port)).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => CliError::PortInUse { port },
        _ => CliError::Server(format!("cannot listen on port {port}: {e}")),
    })
}

pub async fn serve_on(listener: TcpListener, app: Router) -> Result<(), CliError> {
    axum::serve(listener, app).await.map_err(|e| CliError::Server(e.to_string()))
}

pub fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let b = load_input(&args.input, args.track)?;
    let bytes = scorelens::bundle::serialize(&b);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Server(e.to_string()))?;
    runtime.block_on(async {
        let listener = bind(args.port).await?;
        if let Ok(addr) = listener.local_addr() {
            log::info!("serving {} on http://{addr}", args.input.display());
        }
        serve_on(listener, router(bytes, args.assets.clone())).await
    })
}
