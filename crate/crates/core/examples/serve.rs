//! Runs the server with session logs under a temp directory.
//! Connect a client to the printed `/ws` URL; Ctrl-C stops it.
//!
//!     cargo run --example serve

use miboard::server::{serve, ServeOptions};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt().with_env_filter("info").init();
    let log_dir = std::env::temp_dir().join("miboard-logs");
    let opts = ServeOptions {
        bind: "127.0.0.1:8080".parse().unwrap(),
        tcp: Some("127.0.0.1:8081".parse().unwrap()),
        log_dir: Some(log_dir.clone()),
        ..ServeOptions::default()
    };
    let server = serve(opts).await?;
    println!("ws://{}/ws, tcp {}, logs in {}", server.ws_addr(), server.tcp_addr().unwrap(), log_dir.display());
    tokio::signal::ctrl_c().await?;
    server.shutdown().await;
    Ok(())
}
