use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use avatar_core::tensor::Tensor;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use base64::Engine;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{mpsc, watch};
use tower_http::services::ServeDir;

use super::protocol::{ClientMessage, ServerMessage};
use super::session::{compute, Applied, SessionAssets, SessionState};

/// Outbound queue depth per connection.
const OUTBOUND_QUEUE: usize = 64;

/// Routes: `/ws` for the protocol, `/` for a short banner, or the static
/// viewer bundle from `ui` when given.
pub fn router(assets: Arc<SessionAssets>, ui: Option<PathBuf>) -> Router {
    let router = Router::new().route("/ws", get(upgrade)).with_state(assets);
    match ui {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router.route("/", get(|| async { "avatar steering server; connect a WebSocket to /ws\n" })),
    }
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, assets: Arc<SessionAssets>, ui: Option<PathBuf>) -> std::io::Result<()> {
    axum::serve(listener, router(assets, ui)).await
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<TcpListener> {
    TcpListener::bind(addr).await
}

async fn upgrade(ws: WebSocketUpgrade, State(assets): State<Arc<SessionAssets>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| session(socket, assets))
}

fn text(m: &ServerMessage) -> Message {
    Message::Text(m.to_json().into())
}

/// One connection: a reader applying messages to the session state, a
/// worker computing the newest state, and a writer draining replies.
///
/// The reader publishes each new state through a watch channel, so bursts
/// that arrive while the worker is busy collapse to the latest one.
async fn session(socket: WebSocket, assets: Arc<SessionAssets>) {
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = mpsc::channel::<Message>(OUTBOUND_QUEUE);
    let writer = tokio::spawn(async move {
        while let Some(m) = out_rx.recv().await {
            if sink.send(m).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    let mut state = SessionState::initial(&assets);
    let mut generation = 0u64;
    let (job_tx, job_rx) = watch::channel((generation, state.clone()));
    let worker = tokio::spawn(worker(assets.clone(), job_rx, out_tx.clone()));

    while let Some(Ok(msg)) = stream.next().await {
        let reply = match msg {
            Message::Text(t) => match ClientMessage::parse(t.as_str()) {
                Ok(m) => match state.apply(m, &assets) {
                    Ok(Applied::Recompute) => {
                        generation += 1;
                        let _ = job_tx.send((generation, state.clone()));
                        None
                    }
                    Ok(Applied::Snapshot) => Some(snapshot(&state, generation, &assets)),
                    Err(e) => Some(ServerMessage::Error { reason: e.to_string() }),
                },
                Err(reason) => Some(ServerMessage::Error { reason }),
            },
            Message::Binary(_) => Some(ServerMessage::Error { reason: "binary frames are not accepted".into() }),
            Message::Close(_) => break,
            _ => None,
        };
        if let Some(r) = reply {
            if out_tx.send(text(&r)).await.is_err() {
                break;
            }
        }
    }
    drop(job_tx);
    let _ = worker.await;
    drop(out_tx);
    let _ = writer.await;
}

fn snapshot(state: &SessionState, generation: u64, assets: &SessionAssets) -> ServerMessage {
    ServerMessage::Snapshot {
        generation,
        mode: state.mode,
        frame: state.frame,
        frame_count: assets.avatar.motion.len(),
        dofs: state.dofs.clone(),
        dof_ranges: assets.avatar.skeleton.dofs.iter().map(|d| d.range).collect(),
        camera: state.camera.clone(),
    }
}

async fn worker(assets: Arc<SessionAssets>, mut jobs: watch::Receiver<(u64, SessionState)>, out: mpsc::Sender<Message>) {
    let mut sent_faces = false;
    let mut last: Option<u64> = None;
    loop {
        let (generation, state) = jobs.borrow_and_update().clone();
        let coalesced = last.map_or(0, |l| generation.saturating_sub(l + 1));
        last = Some(generation);
        let a = assets.clone();
        let result = tokio::task::spawn_blocking(move || compute(&a, &state)).await;
        let messages = match result {
            Ok(Ok(c)) => {
                let template = &assets.avatar.template;
                let flat: Vec<f64> = c.positions.iter().flat_map(|p| p.to_array()).collect();
                let buffer = Tensor::from_f64(vec![c.positions.len(), 3], &flat).map(|t| t.to_bytes());
                match buffer {
                    Ok(bytes) => {
                        let mesh = ServerMessage::Mesh {
                            generation,
                            vertex_count: c.positions.len(),
                            face_count: template.face_count(),
                            faces: (!sent_faces).then(|| template.faces().to_vec()),
                        };
                        sent_faces = true;
                        let png = base64::engine::general_purpose::STANDARD.encode(&c.png);
                        vec![
                            text(&mesh),
                            Message::Binary(bytes.into()),
                            text(&ServerMessage::Render { generation, width: c.width, height: c.height, png }),
                            text(&ServerMessage::Stats { generation, coalesced, stages: c.stats }),
                        ]
                    }
                    Err(e) => vec![text(&ServerMessage::Error { reason: e.to_string() })],
                }
            }
            Ok(Err(e)) => vec![text(&ServerMessage::Error { reason: e.to_string() })],
            Err(e) => vec![text(&ServerMessage::Error { reason: format!("worker failed: {e}") })],
        };
        for m in messages {
            if out.send(m).await.is_err() {
                return;
            }
        }
        if jobs.changed().await.is_err() {
            return;
        }
    }
}
