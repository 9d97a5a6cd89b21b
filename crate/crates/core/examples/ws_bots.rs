//! Starts a server and plays a whole game with bots connected over real
//! WebSockets.
//!
//!     cargo run --example ws_bots

use futures::{SinkExt, StreamExt};
use miboard::bots::{BotPolicy, WireBot};
use miboard::config::GameConfig;
use miboard::protocol::{decode, encode, ClientCommand, Envelope, Message, ServerEvent};
use miboard::server::{serve, ServeOptions};
use tokio::sync::mpsc;
use tokio_tungstenite::tungstenite::Message as Ws;

async fn bot(url: String, name: String, lobby: mpsc::Sender<String>, lobby_rx: Option<String>, host: bool) -> Option<String> {
    let (ws, _) = tokio_tungstenite::connect_async(&url).await.ok()?;
    let (mut tx, mut rx) = ws.split();
    let mut me = WireBot::new(BotPolicy::UNIFORM.greedy(), name.len() as u64);
    let send = |c: ClientCommand| Ws::Text(encode(&Envelope::command(None, c)).unwrap());
    tx.send(send(ClientCommand::Join { name: name.clone(), lobby: lobby_rx })).await.ok()?;
    if host {
        tx.send(send(ClientCommand::CreateLobby { config_overrides: serde_json::Value::Null, pack: None })).await.ok()?;
    }
    while let Some(Ok(Ws::Text(text))) = rx.next().await {
        let Ok(Envelope { body: Message::Event(ev), .. }) = decode(text.as_bytes()) else { continue };
        me.observe(&ev);
        match &ev {
            ServerEvent::LobbyState { lobby_id, members, status, .. } if host => {
                let _ = lobby.send(lobby_id.clone()).await;
                if members.len() == 3 && *status == miboard::protocol::LobbyStatus::Waiting {
                    tx.send(send(ClientCommand::StartGame {})).await.ok()?;
                }
            }
            ServerEvent::GameOver { winner_id } => return Some(winner_id.to_string()),
            _ => {}
        }
        while let Some(c) = me.next_command() {
            tx.send(send(c)).await.ok()?;
        }
    }
    None
}

#[tokio::main]
async fn main() {
    let opts = ServeOptions {
        bind: "127.0.0.1:0".parse().unwrap(),
        config: GameConfig { vote_timeout: 5, discussion_timeout: 5, powercard_window_timeout: 5, ..GameConfig::default() },
        ..ServeOptions::default()
    };
    let server = serve(opts).await.unwrap();
    let url = format!("ws://{}/ws", server.ws_addr());
    println!("server at {url}");

    let (lobby_tx, mut lobby_rx) = mpsc::channel(16);
    let host = tokio::spawn(bot(url.clone(), "ana".into(), lobby_tx.clone(), None, true));
    let lobby = lobby_rx.recv().await.unwrap();
    println!("lobby {lobby}");
    let others: Vec<_> = ["ben", "cho"]
        .iter()
        .map(|n| tokio::spawn(bot(url.clone(), n.to_string(), lobby_tx.clone(), Some(lobby.clone()), false)))
        .collect();
    let winner = host.await.unwrap();
    for o in others {
        let _ = o.await;
    }
    println!("winner: {winner:?}");
    server.shutdown().await;
}
