//! Tokio front end: WebSocket at `/ws` (one envelope per text frame) and an
//! optional raw TCP listener (one envelope per line).

use std::collections::HashMap;
use std::hash::{BuildHasher, Hasher};
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, watch};
use tokio::task::JoinHandle;

use crate::config::GameConfig;
use crate::content::PackLibrary;

use super::hub::{ConnId, Delivery, Hub};

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub bind: SocketAddr,
    pub tcp: Option<SocketAddr>,
    pub log_dir: Option<PathBuf>,
    pub config: GameConfig,
    pub packs: PackLibrary,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            tcp: None,
            log_dir: None,
            config: GameConfig::default(),
            packs: PackLibrary::with_sample(),
        }
    }
}

struct Inner {
    hub: Hub,
    outboxes: HashMap<ConnId, mpsc::UnboundedSender<String>>,
}

struct Shared {
    inner: Mutex<Inner>,
    start: Instant,
    log_dir: Option<PathBuf>,
}

impl Shared {
    fn now(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }

    /// Runs `f` on the hub and pushes its output while still holding the
    /// lock, so every connection sees lines in hub order.
    fn with_hub(&self, f: impl FnOnce(&mut Hub, u64) -> Vec<Delivery>) {
        let now = self.now();
        let mut inner = self.inner.lock().expect("hub lock");
        let deliveries = f(&mut inner.hub, now);
        for d in deliveries {
            if let Some(tx) = inner.outboxes.get(&d.conn) {
                let _ = tx.send(d.line);
            }
        }
        let logs = inner.hub.take_logs();
        if let Some(dir) = &self.log_dir {
            for (lobby, lines) in logs {
                if let Err(e) = append_log(dir, &lobby, &lines) {
                    tracing::error!("writing log for {lobby}: {e}");
                }
            }
        }
    }

    fn open(&self) -> (ConnId, mpsc::UnboundedReceiver<String>) {
        let (tx, rx) = mpsc::unbounded_channel();
        let mut inner = self.inner.lock().expect("hub lock");
        let id = inner.hub.connect();
        inner.outboxes.insert(id, tx);
        (id, rx)
    }

    fn close(&self, conn: ConnId) {
        self.with_hub(|hub, now| hub.disconnect(conn, now));
        self.inner.lock().expect("hub lock").outboxes.remove(&conn);
    }
}

fn append_log(dir: &std::path::Path, lobby: &str, lines: &[String]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(dir.join(format!("{lobby}.mblog")))?;
    file.write_all(lines.concat().as_bytes())?;
    file.flush()
}

/// Seeds and lobby ids for a live server.
pub fn os_entropy() -> impl FnMut() -> u64 + Send + 'static {
    let state = std::collections::hash_map::RandomState::new();
    let mut counter = 0u64;
    move || {
        counter += 1;
        let mut h = state.build_hasher();
        h.write_u64(counter);
        h.write_u128(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos())
                .unwrap_or_default(),
        );
        h.finish()
    }
}

/// A running server. Dropping it does not stop it; call `shutdown`.
pub struct ServerHandle {
    ws_addr: SocketAddr,
    tcp_addr: Option<SocketAddr>,
    shared: Arc<Shared>,
    stop: watch::Sender<bool>,
    tasks: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn ws_addr(&self) -> SocketAddr {
        self.ws_addr
    }

    pub fn tcp_addr(&self) -> Option<SocketAddr> {
        self.tcp_addr
    }

    /// Stops accepting, closes every session (writing final checkpoints).
    pub async fn shutdown(self) {
        let _ = self.stop.send(true);
        for t in self.tasks {
            t.abort();
            let _ = t.await;
        }
        self.shared.with_hub(|hub, _| {
            hub.shutdown();
            Vec::new()
        });
    }
}

/// Binds the listeners and starts serving in the background.
pub async fn serve(opts: ServeOptions) -> std::io::Result<ServerHandle> {
    serve_with_entropy(opts, os_entropy()).await
}

pub async fn serve_with_entropy(
    opts: ServeOptions,
    entropy: impl FnMut() -> u64 + Send + 'static,
) -> std::io::Result<ServerHandle> {
    let shared = Arc::new(Shared {
        inner: Mutex::new(Inner {
            hub: Hub::new(opts.config, opts.packs, entropy),
            outboxes: HashMap::new(),
        }),
        start: Instant::now(),
        log_dir: opts.log_dir,
    });
    let (stop, stop_rx) = watch::channel(false);
    let mut tasks = Vec::new();

    let listener = TcpListener::bind(opts.bind).await?;
    let ws_addr = listener.local_addr()?;
    let app = Router::new()
        .route("/ws", get(ws_upgrade))
        .with_state(shared.clone());
    let mut rx = stop_rx.clone();
    tasks.push(tokio::spawn(async move {
        let _ = axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = rx.wait_for(|s| *s).await;
            })
            .await;
    }));

    let tcp_addr = match opts.tcp {
        Some(addr) => {
            let listener = TcpListener::bind(addr).await?;
            let local = listener.local_addr()?;
            let shared = shared.clone();
            tasks.push(tokio::spawn(async move {
                while let Ok((stream, _)) = listener.accept().await {
                    tokio::spawn(tcp_conn(stream, shared.clone()));
                }
            }));
            Some(local)
        }
        None => None,
    };

    let ticker = shared.clone();
    tasks.push(tokio::spawn(async move {
        let mut interval = tokio::time::interval(Duration::from_millis(250));
        loop {
            interval.tick().await;
            ticker.with_hub(|hub, now| hub.tick(now));
        }
    }));

    tracing::info!("listening on ws://{ws_addr}/ws");
    Ok(ServerHandle {
        ws_addr,
        tcp_addr,
        shared,
        stop,
        tasks,
    })
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| ws_conn(socket, shared))
}

async fn ws_conn(socket: WebSocket, shared: Arc<Shared>) {
    let (conn, mut rx) = shared.open();
    let (mut sink, mut stream) = socket.split();
    let writer = tokio::spawn(async move {
        while let Some(line) = rx.recv().await {
            let frame = line.trim_end_matches('\n').to_string();
            if sink.send(WsMessage::Text(frame)).await.is_err() {
                break;
            }
        }
    });
    while let Some(Ok(msg)) = stream.next().await {
        let bytes = match msg {
            WsMessage::Text(t) => t.into_bytes(),
            WsMessage::Binary(b) => b,
            WsMessage::Close(_) => break,
            _ => continue,
        };
        shared.with_hub(|hub, now| hub.receive(conn, &bytes, now));
    }
    shared.close(conn);
    writer.abort();
}

async fn tcp_conn(stream: TcpStream, shared: Arc<Shared>) {
    let (conn, mut rx) = shared.open();
    let (read, mut write) = stream.into_split();
    let writer = tokio::spawn(async move {
        while let Some(line) = rx.recv().await {
            if write.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
    });
    let mut lines = BufReader::new(read).lines();
    while let Ok(Some(line)) = lines.next_line().await {
        shared.with_hub(|hub, now| hub.receive(conn, line.as_bytes(), now));
    }
    shared.close(conn);
    writer.abort();
}
