use serde_json::Value;

use crate::config::{ConfigError, GameConfig};
use crate::content::PackLibrary;
use crate::game::PlayerId;
use crate::protocol::{LobbyStatus, MemberInfo, ServerEvent};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub player_id: PlayerId,
    pub name: String,
    pub connected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lobby {
    pub lobby_id: String,
    pub host_id: PlayerId,
    pub members: Vec<Member>,
    pub config: GameConfig,
    pub pack_ref: String,
    pub status: LobbyStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LobbyError {
    #[error(transparent)]
    InvalidConfig(#[from] ConfigError),
    #[error("unknown pack `{0}`")]
    UnknownPack(String),
    #[error("lobby is full")]
    LobbyFull,
    #[error("name `{0}` is taken in this lobby")]
    DuplicateName(String),
    #[error("name must not be empty")]
    EmptyName,
    #[error("game already started")]
    AlreadyStarted,
    #[error("only the host may start the game")]
    NotHost,
    #[error("need at least {0} players")]
    NotEnoughPlayers(usize),
    #[error("unknown lobby `{0}`")]
    UnknownLobby(String),
    #[error("not in a lobby")]
    NotInSession,
    #[error("send join first")]
    NotJoined,
    #[error("already in a lobby")]
    AlreadyInLobby,
}

impl LobbyError {
    pub fn code(&self) -> &'static str {
        match self {
            LobbyError::InvalidConfig(_) => "InvalidConfig",
            LobbyError::UnknownPack(_) => "UnknownPack",
            LobbyError::LobbyFull => "LobbyFull",
            LobbyError::DuplicateName(_) => "DuplicateName",
            LobbyError::EmptyName => "EmptyName",
            LobbyError::AlreadyStarted => "AlreadyStarted",
            LobbyError::NotHost => "NotHost",
            LobbyError::NotEnoughPlayers(_) => "NotEnoughPlayers",
            LobbyError::UnknownLobby(_) => "UnknownLobby",
            LobbyError::NotInSession => "NotInSession",
            LobbyError::NotJoined => "NotJoined",
            LobbyError::AlreadyInLobby => "AlreadyInLobby",
        }
    }
}

/// A lobby with its host as the only member. `pack_ref` of `None` picks the
/// library's first pack.
pub fn create_lobby(
    lobby_id: String,
    host: Member,
    base: &GameConfig,
    config_overrides: &Value,
    pack_ref: Option<&str>,
    packs: &PackLibrary,
) -> Result<Lobby, LobbyError> {
    let config = base.with_overrides(config_overrides)?;
    let pack_ref = match pack_ref {
        Some(name) => {
            packs
                .get(name)
                .ok_or_else(|| LobbyError::UnknownPack(name.to_string()))?;
            name.to_string()
        }
        None => packs
            .first()
            .map(|(name, _)| name.to_string())
            .ok_or_else(|| LobbyError::UnknownPack(String::new()))?,
    };
    if host.name.trim().is_empty() {
        return Err(LobbyError::EmptyName);
    }
    Ok(Lobby {
        lobby_id,
        host_id: host.player_id.clone(),
        members: vec![host],
        config,
        pack_ref,
        status: LobbyStatus::Waiting,
    })
}

pub fn join_lobby(lobby: &mut Lobby, player: Member) -> Result<(), LobbyError> {
    if lobby.status != LobbyStatus::Waiting {
        return Err(LobbyError::AlreadyStarted);
    }
    if player.name.trim().is_empty() {
        return Err(LobbyError::EmptyName);
    }
    if lobby.members.len() >= lobby.config.max_players {
        return Err(LobbyError::LobbyFull);
    }
    if lobby.members.iter().any(|m| m.name == player.name) {
        return Err(LobbyError::DuplicateName(player.name));
    }
    lobby.members.push(player);
    Ok(())
}

impl Lobby {
    pub fn member(&self, id: &PlayerId) -> Option<&Member> {
        self.members.iter().find(|m| &m.player_id == id)
    }

    pub fn member_mut(&mut self, id: &PlayerId) -> Option<&mut Member> {
        self.members.iter_mut().find(|m| &m.player_id == id)
    }

    pub fn member_by_name(&self, name: &str) -> Option<&Member> {
        self.members.iter().find(|m| m.name == name)
    }

    /// Removes a waiting member, handing the host role on if needed.
    pub fn remove(&mut self, id: &PlayerId) {
        self.members.retain(|m| &m.player_id != id);
        if &self.host_id == id {
            if let Some(next) = self.members.first() {
                self.host_id = next.player_id.clone();
            }
        }
    }

    pub fn state_event(&self) -> ServerEvent {
        ServerEvent::LobbyState {
            lobby_id: self.lobby_id.clone(),
            host_id: self.host_id.clone(),
            members: self
                .members
                .iter()
                .map(|m| MemberInfo {
                    player_id: m.player_id.clone(),
                    name: m.name.clone(),
                    connected: m.connected,
                })
                .collect(),
            pack: self.pack_ref.clone(),
            status: self.status,
            config: self.config.clone(),
        }
    }
}
