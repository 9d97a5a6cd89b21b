//! Connection bookkeeping on top of [`Session`]s.
//!
//! The hub takes raw lines from numbered connections and returns the lines
//! to write back, already sequenced per connection. Transports (WebSocket,
//! TCP, in-process tests) only move bytes.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::config::GameConfig;
use crate::content::PackLibrary;
use crate::game::PlayerId;
use crate::protocol::{
    decode, encode, ClientCommand, Envelope, Message, ServerEvent, PROTOCOL_VERSION,
};

use super::lobby::{create_lobby, LobbyError, Member};
use super::session::{Outbound, Session};

pub type ConnId = u64;

/// One line for one connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub conn: ConnId,
    pub line: String,
}

#[derive(Debug, Default)]
struct Conn {
    player: Option<PlayerId>,
    name: Option<String>,
    lobby: Option<String>,
    seq: u64,
}

pub struct Hub {
    config: GameConfig,
    packs: PackLibrary,
    sessions: BTreeMap<String, Session>,
    conns: BTreeMap<ConnId, Conn>,
    next_conn: ConnId,
    next_player: u64,
    entropy: Box<dyn FnMut() -> u64 + Send>,
    /// Log lines per lobby not yet taken, including closed sessions.
    pending_logs: BTreeMap<String, Vec<String>>,
}

impl Hub {
    /// `entropy` supplies lobby ids and game seeds.
    pub fn new(
        config: GameConfig,
        packs: PackLibrary,
        entropy: impl FnMut() -> u64 + Send + 'static,
    ) -> Self {
        Hub {
            config,
            packs,
            sessions: BTreeMap::new(),
            conns: BTreeMap::new(),
            next_conn: 1,
            next_player: 1,
            entropy: Box::new(entropy),
            pending_logs: BTreeMap::new(),
        }
    }

    pub fn connect(&mut self) -> ConnId {
        let id = self.next_conn;
        self.next_conn += 1;
        self.conns.insert(id, Conn::default());
        id
    }

    pub fn session(&self, lobby_id: &str) -> Option<&Session> {
        self.sessions.get(lobby_id)
    }

    pub fn lobby_ids(&self) -> Vec<String> {
        self.sessions.keys().cloned().collect()
    }

    pub fn player_of(&self, conn: ConnId) -> Option<&PlayerId> {
        self.conns.get(&conn)?.player.as_ref()
    }

    pub fn lobby_of(&self, conn: ConnId) -> Option<&str> {
        self.conns.get(&conn)?.lobby.as_deref()
    }

    /// Earliest armed timer across sessions.
    pub fn next_deadline(&self) -> Option<u64> {
        self.sessions.values().filter_map(Session::next_deadline).min()
    }

    /// Handles one inbound line.
    pub fn receive(&mut self, conn: ConnId, line: &[u8], now: u64) -> Vec<Delivery> {
        if !self.conns.contains_key(&conn) {
            return Vec::new();
        }
        let envelope = match decode(line) {
            Ok(e) => e,
            Err(e) => {
                return self.direct(conn, ServerEvent::error(None, e.code(), e.to_string()));
            }
        };
        let Envelope { id, body, .. } = envelope;
        let command = match body {
            Message::Command(c) => c,
            Message::Event(_) => {
                return self.direct(
                    conn,
                    ServerEvent::error(id, "UnexpectedEvent", "clients send commands only"),
                );
            }
        };
        let fail = |hub: &mut Hub, e: LobbyError, id: Option<String>| {
            hub.direct(conn, ServerEvent::error(id, e.code(), e.to_string()))
        };
        match command {
            ClientCommand::Join { name, lobby } => match self.join(conn, name, lobby, now) {
                Ok(out) => out,
                Err(e) => fail(self, e, id),
            },
            ClientCommand::CreateLobby {
                config_overrides,
                pack,
            } => match self.create(conn, &config_overrides, pack.as_deref()) {
                Ok(out) => out,
                Err(e) => fail(self, e, id),
            },
            command => {
                let c = &self.conns[&conn];
                let (Some(player), Some(lobby)) = (c.player.clone(), c.lobby.clone()) else {
                    return fail(self, LobbyError::NotInSession, id);
                };
                let leaving = matches!(command, ClientCommand::Leave {});
                let entropy = &mut self.entropy;
                let session = self.sessions.get_mut(&lobby).expect("conn lobby exists");
                let out = session.handle_command(&player, id, command, now, &mut **entropy);
                let mut deliveries = self.route(&lobby, out);
                if leaving {
                    self.conns.get_mut(&conn).expect("checked").lobby = None;
                    deliveries.extend(self.reap(&lobby));
                }
                deliveries
            }
        }
    }

    fn join(
        &mut self,
        conn: ConnId,
        name: String,
        lobby: Option<String>,
        now: u64,
    ) -> Result<Vec<Delivery>, LobbyError> {
        if name.trim().is_empty() {
            return Err(LobbyError::EmptyName);
        }
        let c = &self.conns[&conn];
        if c.lobby.is_some() {
            return Err(LobbyError::AlreadyInLobby);
        }
        let candidate = c.player.clone().unwrap_or_else(|| {
            let id = PlayerId(format!("p{}", self.next_player));
            self.next_player += 1;
            id
        });
        let Some(lobby_id) = lobby else {
            let c = self.conns.get_mut(&conn).expect("checked");
            c.player = Some(candidate.clone());
            c.name = Some(name);
            return Ok(self.direct(conn, welcome(candidate)));
        };
        let session = self
            .sessions
            .get_mut(&lobby_id)
            .ok_or_else(|| LobbyError::UnknownLobby(lobby_id.clone()))?;
        let (player, out) = session.join(candidate, &name, now)?;
        // A rejoin replaces whatever connection the player had before.
        let stale: Vec<ConnId> = self
            .conns
            .iter()
            .filter(|(id, c)| **id != conn && c.player.as_ref() == Some(&player))
            .map(|(id, _)| *id)
            .collect();
        for id in stale {
            self.conns.remove(&id);
        }
        let c = self.conns.get_mut(&conn).expect("checked");
        c.player = Some(player.clone());
        c.name = Some(name);
        c.lobby = Some(lobby_id.clone());
        let mut deliveries = self.direct(conn, welcome(player));
        deliveries.extend(self.route(&lobby_id, out));
        Ok(deliveries)
    }

    fn create(
        &mut self,
        conn: ConnId,
        overrides: &serde_json::Value,
        pack: Option<&str>,
    ) -> Result<Vec<Delivery>, LobbyError> {
        let c = &self.conns[&conn];
        let (Some(player), Some(name)) = (c.player.clone(), c.name.clone()) else {
            return Err(LobbyError::NotJoined);
        };
        if c.lobby.is_some() {
            return Err(LobbyError::AlreadyInLobby);
        }
        let lobby_id = loop {
            let id = lobby_code((self.entropy)());
            if !self.sessions.contains_key(&id) {
                break id;
            }
        };
        let host = Member {
            player_id: player,
            name,
            connected: true,
        };
        let lobby = create_lobby(lobby_id.clone(), host, &self.config, overrides, pack, &self.packs)?;
        let pack = Arc::new(self.packs.get(&lobby.pack_ref).expect("validated").clone());
        let session = Session::new(lobby, pack);
        let out = session.lobby_state();
        self.sessions.insert(lobby_id.clone(), session);
        self.conns.get_mut(&conn).expect("checked").lobby = Some(lobby_id.clone());
        Ok(self.route(&lobby_id, out))
    }

    /// Transport closed.
    pub fn disconnect(&mut self, conn: ConnId, now: u64) -> Vec<Delivery> {
        let Some(c) = self.conns.remove(&conn) else {
            return Vec::new();
        };
        let (Some(player), Some(lobby)) = (c.player, c.lobby) else {
            return Vec::new();
        };
        let Some(session) = self.sessions.get_mut(&lobby) else {
            return Vec::new();
        };
        let out = session.disconnect(&player, now);
        let mut deliveries = self.route(&lobby, out);
        deliveries.extend(self.reap(&lobby));
        deliveries
    }

    /// Fires due timers in every session.
    pub fn tick(&mut self, now: u64) -> Vec<Delivery> {
        let ids: Vec<String> = self.sessions.keys().cloned().collect();
        let mut deliveries = Vec::new();
        for id in ids {
            let out = self.sessions.get_mut(&id).expect("listed").tick(now);
            deliveries.extend(self.route(&id, out));
        }
        deliveries
    }

    /// New log lines, per lobby.
    pub fn take_logs(&mut self) -> BTreeMap<String, Vec<String>> {
        let mut logs = std::mem::take(&mut self.pending_logs);
        for (id, session) in self.sessions.iter_mut() {
            let lines = session.take_log_lines();
            if !lines.is_empty() {
                logs.entry(id.clone()).or_default().extend(lines);
            }
        }
        logs
    }

    /// Closes every session so each log ends with a checkpoint.
    pub fn shutdown(&mut self) {
        let ids: Vec<String> = self.sessions.keys().cloned().collect();
        for id in ids {
            self.close_session(&id);
        }
    }

    /// Drops a session nobody is connected to.
    fn reap(&mut self, lobby: &str) -> Vec<Delivery> {
        if self.sessions.get(lobby).is_some_and(|s| s.connected_members() == 0) {
            self.close_session(lobby);
        }
        Vec::new()
    }

    fn close_session(&mut self, lobby: &str) {
        if let Some(mut session) = self.sessions.remove(lobby) {
            session.close();
            let lines = session.take_log_lines();
            if !lines.is_empty() {
                self.pending_logs.entry(lobby.to_string()).or_default().extend(lines);
            }
        }
        for c in self.conns.values_mut() {
            if c.lobby.as_deref() == Some(lobby) {
                c.lobby = None;
            }
        }
    }

    fn direct(&mut self, conn: ConnId, event: ServerEvent) -> Vec<Delivery> {
        self.deliver(conn, event).into_iter().collect()
    }

    fn deliver(&mut self, conn: ConnId, event: ServerEvent) -> Option<Delivery> {
        let c = self.conns.get_mut(&conn)?;
        c.seq += 1;
        let line = encode(&Envelope::event(c.seq, event)).expect("server events encode");
        Some(Delivery { conn, line })
    }

    fn route(&mut self, lobby: &str, out: Vec<Outbound>) -> Vec<Delivery> {
        let mut by_player: BTreeMap<PlayerId, ConnId> = BTreeMap::new();
        for (id, c) in &self.conns {
            if let (Some(p), Some(l)) = (&c.player, &c.lobby) {
                if l == lobby {
                    by_player.insert(p.clone(), *id);
                }
            }
        }
        out.into_iter()
            .filter_map(|o| {
                let conn = *by_player.get(&o.to)?;
                self.deliver(conn, o.event)
            })
            .collect()
    }
}

fn welcome(player_id: PlayerId) -> ServerEvent {
    ServerEvent::Welcome {
        player_id,
        protocol: PROTOCOL_VERSION.to_string(),
    }
}

/// Six characters from an unambiguous alphabet.
pub fn lobby_code(mut n: u64) -> String {
    const ALPHABET: &[u8] = b"ABCDEFGHJKLMNPQRSTUVWXYZ23456789";
    (0..6)
        .map(|_| {
            let c = ALPHABET[(n % ALPHABET.len() as u64) as usize] as char;
            n /= ALPHABET.len() as u64;
            c
        })
        .collect()
}
