use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Router;

use super::api::Api;
use crate::{Error, Result};

async fn dispatch(State(api): State<Arc<Api>>, method: Method, uri: Uri, body: Bytes) -> Response {
    let target = uri.path_and_query().map_or_else(|| uri.path().to_string(), |pq| pq.as_str().to_string());
    let result = tokio::task::spawn_blocking(move || api.handle(method.as_str(), &target, &body)).await;
    match result {
        Ok(r) => (
            StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR),
            [(header::CONTENT_TYPE, "application/json")],
            r.body,
        )
            .into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

pub fn router(api: Arc<Api>) -> Router {
    Router::new().fallback(dispatch).with_state(api)
}

/// Serve on an already bound listener until the process ends.
pub async fn serve_listener(api: Arc<Api>, listener: tokio::net::TcpListener) -> Result<()> {
    axum::serve(listener, router(api))
        .await
        .map_err(|e| Error::io("<server>", e))
}

/// Bind `addr`, call `on_ready` with the bound address, then serve forever.
pub fn serve(api: Api, addr: SocketAddr, on_ready: impl FnOnce(SocketAddr)) -> Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::io("<runtime>", e))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Error::io(addr.to_string(), e))?;
        on_ready(listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?);
        serve_listener(Arc::new(api), listener).await
    })
}
