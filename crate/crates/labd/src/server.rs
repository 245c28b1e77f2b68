use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{ConnectInfo, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::serve::ListenerExt;
use axum::{Json, Router};
use helab_core::Family;
use serde::Deserialize;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;
use tower_http::cors::{Any, CorsLayer};
use tower_http::set_header::SetResponseHeaderLayer;

use crate::accept::AcceptLog;
use crate::echo::echo_for;
use crate::ladder::Ladder;
use crate::shaping::{render_command, BlackholeListener, ShapingHook};
use crate::store::{ResultStore, SessionRecord, StoreError};

#[derive(Debug, Clone)]
pub struct LabdConfig {
    pub ladder: Ladder,
    /// Control listener serving /ladder, /results and Host-routed /echo.
    pub listen: SocketAddr,
    pub storage: PathBuf,
    pub hook: ShapingHook,
    /// Also bind every tier's own v4/v6 endpoints.
    pub bind_tiers: bool,
}

#[derive(Debug)]
struct LabState {
    ladder: Ladder,
    store: ResultStore,
    hook: ShapingHook,
    accepts: AcceptLog,
}

#[derive(Debug, Clone)]
struct Ctx {
    lab: Arc<LabState>,
    tier: Option<usize>,
}

/// A running daemon. Dropping it stops every listener.
#[derive(Debug)]
pub struct Labd {
    addr: SocketAddr,
    lab: Arc<LabState>,
    tasks: Vec<JoinHandle<()>>,
    _holes: Vec<BlackholeListener>,
}

impl Labd {
    /// Tier endpoints with port 0 get an ephemeral port shared by both
    /// families; [`Labd::ladder`] reports the bound ports.
    pub async fn start(config: LabdConfig, accepts: AcceptLog) -> io::Result<Self> {
        config.ladder.validate().map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        let store = ResultStore::open(&config.storage)?;
        let mut ladder = config.ladder.clone();
        let mut tier_listeners = Vec::new();
        let mut holes = Vec::new();
        if config.bind_tiers {
            for tier in &mut ladder.tiers {
                let hole = config.hook == ShapingHook::Blackhole && tier.delay_ms > 0;
                let (v4, v6) = bind_pair(tier.v4_endpoint, tier.v6_endpoint, hole).await?;
                tier.v4_endpoint = v4.local_addr()?;
                match v6 {
                    V6Endpoint::Live(l) => {
                        tier.v6_endpoint = l.local_addr()?;
                        tier_listeners.push((tier.tier_index, l));
                    }
                    V6Endpoint::Hole(h) => {
                        tier.v6_endpoint = h.local_addr();
                        holes.push(h);
                    }
                }
                tier_listeners.push((tier.tier_index, v4));
            }
        }
        let lab = Arc::new(LabState { ladder, store, hook: config.hook, accepts });
        let control = TcpListener::bind(config.listen).await?;
        let addr = control.local_addr()?;
        let mut tasks = vec![spawn_listener(control, Ctx { lab: lab.clone(), tier: None })];
        for (tier, listener) in tier_listeners {
            tasks.push(spawn_listener(listener, Ctx { lab: lab.clone(), tier: Some(tier) }));
        }
        Ok(Self { addr, lab, tasks, _holes: holes })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn ladder(&self) -> &Ladder {
        &self.lab.ladder
    }

    pub fn accepts(&self) -> &AcceptLog {
        &self.lab.accepts
    }

    pub fn store(&self) -> &ResultStore {
        &self.lab.store
    }

    /// Rendered per-tier commands for [`ShapingHook::Command`].
    pub fn shaping_commands(&self) -> Vec<String> {
        match &self.lab.hook {
            ShapingHook::Command { template } => {
                self.lab.ladder.tiers.iter().map(|t| render_command(template, t)).collect()
            }
            _ => Vec::new(),
        }
    }
}

impl Drop for Labd {
    fn drop(&mut self) {
        for t in &self.tasks {
            t.abort();
        }
    }
}

enum V6Endpoint {
    Live(TcpListener),
    Hole(BlackholeListener),
}

async fn bind_v6(addr: SocketAddr, hole: bool) -> io::Result<V6Endpoint> {
    Ok(if hole {
        V6Endpoint::Hole(BlackholeListener::bind(addr).await?)
    } else {
        V6Endpoint::Live(TcpListener::bind(addr).await?)
    })
}

async fn bind_pair(v4: SocketAddr, v6: SocketAddr, hole: bool) -> io::Result<(TcpListener, V6Endpoint)> {
    if v4.port() != 0 || v6.port() != 0 {
        return Ok((TcpListener::bind(v4).await?, bind_v6(v6, hole).await?));
    }
    let mut last = None;
    for _ in 0..16 {
        let l4 = TcpListener::bind(v4).await?;
        let port = l4.local_addr()?.port();
        match bind_v6(SocketAddr::new(v6.ip(), port), hole).await {
            Ok(l6) => return Ok((l4, l6)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| io::Error::other("no common port")))
}

fn spawn_listener(listener: TcpListener, ctx: Ctx) -> JoinHandle<()> {
    let log = ctx.lab.accepts.clone();
    let tier = ctx.tier;
    let listener = listener.tap_io(move |stream| {
        if let (Ok(local), Ok(peer)) = (stream.local_addr(), stream.peer_addr()) {
            log.record(tier, local, peer);
        }
        let _ = stream.set_nodelay(true);
    });
    let app = router(ctx).into_make_service_with_connect_info::<SocketAddr>();
    tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!(error = %e, "listener stopped");
        }
    })
}

fn router(ctx: Ctx) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/echo", get(echo))
        .route("/ladder", get(ladder))
        .route("/results", post(results))
        .layer(cors)
        .layer(SetResponseHeaderLayer::overriding(
            header::CACHE_CONTROL,
            HeaderValue::from_static("no-store, no-cache, must-revalidate"),
        ))
        .layer(SetResponseHeaderLayer::overriding(header::PRAGMA, HeaderValue::from_static("no-cache")))
        .with_state(ctx)
}

#[derive(Debug, Deserialize)]
struct EchoQuery {
    nonce: Option<String>,
}

fn error(status: StatusCode, message: impl ToString) -> Response {
    (status, Json(serde_json::json!({ "error": message.to_string() }))).into_response()
}

async fn echo(
    State(ctx): State<Ctx>,
    ConnectInfo(peer): ConnectInfo<SocketAddr>,
    headers: HeaderMap,
    Query(q): Query<EchoQuery>,
) -> Response {
    let ladder = &ctx.lab.ladder;
    let by_host = headers
        .get(header::HOST)
        .and_then(|h| h.to_str().ok())
        .and_then(|h| ladder.tier_for_host(h));
    let Some(tier) = by_host.or_else(|| ctx.tier.and_then(|i| ladder.tiers.get(i))) else {
        return error(StatusCode::NOT_FOUND, "unknown tier");
    };
    if ctx.lab.hook == ShapingHook::ResponseHold && Family::of(&peer.ip()) == Family::V6 && tier.delay_ms > 0 {
        tokio::time::sleep(Duration::from_millis(tier.delay_ms)).await;
    }
    Json(echo_for(tier, peer, ctx.lab.accepts.now_ms(), q.nonce)).into_response()
}

async fn ladder(State(ctx): State<Ctx>) -> Json<Ladder> {
    Json(ctx.lab.ladder.clone())
}

async fn results(State(ctx): State<Ctx>, Json(record): Json<SessionRecord>) -> Response {
    let lab = ctx.lab.clone();
    let outcome = tokio::task::spawn_blocking(move || lab.store.submit(record, &lab.ladder)).await;
    match outcome {
        Ok(Ok(ack)) => Json(ack).into_response(),
        Ok(Err(e @ StoreError::OptOut)) => error(StatusCode::FORBIDDEN, e),
        Ok(Err(e @ (StoreError::Schema(_) | StoreError::LadderVersion { .. }))) => {
            error(StatusCode::UNPROCESSABLE_ENTITY, e)
        }
        Ok(Err(e @ StoreError::Unavailable(_))) => error(StatusCode::SERVICE_UNAVAILABLE, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}
