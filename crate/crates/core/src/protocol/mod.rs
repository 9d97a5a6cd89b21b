//! Wire protocol `miboard/1`.
//!
//! Every message is an envelope: a JSON object with a `type` discriminator,
//! a `payload` object, a server-assigned `seq` on server events, and an
//! optional client-chosen `id` on commands (echoed as `request_id` in
//! errors). One envelope per line, keys sorted. See `docs/PROTOCOL.md` for
//! the message-by-message reference.

mod codec;
mod redact;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::GameConfig;
use crate::content::TargetView;
use crate::game::cards::{EventCard, PowerCardKind};
use crate::game::{Phase, PlayerId};
use crate::strategy::Strategy;

pub use codec::{decode, encode, encode_line, CodecError, MAX_LINE_BYTES};
pub use redact::redact_for;

pub const PROTOCOL_VERSION: &str = "miboard/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum ClientCommand {
    /// Names this connection. With `lobby`, also joins (or rejoins) it.
    Join {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lobby: Option<String>,
    },
    CreateLobby {
        #[serde(default, skip_serializing_if = "Value::is_null")]
        config_overrides: Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pack: Option<String>,
    },
    StartGame {},
    #[serde(rename = "submit_se")]
    SubmitSE { text: String },
    Vote { strategy: Strategy },
    Chat { text: String },
    PlayPowerCard {
        kind: PowerCardKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<PlayerId>,
    },
    AlterStake {},
    SwapStrategy {},
    Roll {},
    Ready {},
    Rematch {},
    Leave {},
}

impl ClientCommand {
    pub const TYPES: [&'static str; 13] = [
        "join",
        "create_lobby",
        "start_game",
        "submit_se",
        "vote",
        "chat",
        "play_power_card",
        "alter_stake",
        "swap_strategy",
        "roll",
        "ready",
        "rematch",
        "leave",
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberInfo {
    pub player_id: PlayerId,
    pub name: String,
    pub connected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LobbyStatus {
    Waiting,
    InGame,
}

/// A player as others see them. `hand` is only filled in for its owner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerView {
    pub player_id: PlayerId,
    pub name: String,
    pub position: u32,
    pub points: u32,
    pub hand_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand: Option<Vec<PowerCardKind>>,
    pub frozen: bool,
    pub connected: bool,
}

/// Game state as shown to clients; never includes the seed or RNG state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub phase: Phase,
    pub reader_id: PlayerId,
    pub board_length: u32,
    pub pack_title: String,
    pub players: Vec<PlayerView>,
    pub config: GameConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub majority_strategy: Option<Strategy>,
    pub reader_in_majority: bool,
    pub unanimous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum ServerEvent {
    Welcome {
        player_id: PlayerId,
        protocol: String,
    },
    LobbyState {
        lobby_id: String,
        host_id: PlayerId,
        members: Vec<MemberInfo>,
        pack: String,
        status: LobbyStatus,
        config: GameConfig,
    },
    GameStarted {
        snapshot: Snapshot,
    },
    PhaseChanged {
        from: Phase,
        to: Phase,
    },
    /// `target_view.assigned_strategy` and `stake` reach the reader only.
    TurnAssigned {
        reader_id: PlayerId,
        target_view: TargetView,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stake: Option<u32>,
    },
    StakeAltered {
        reader_id: PlayerId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stake: Option<u32>,
    },
    StrategySwapped {
        reader_id: PlayerId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        strategy: Option<Strategy>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stake: Option<u32>,
    },
    #[serde(rename = "se_posted")]
    SEPosted {
        reader_id: PlayerId,
        text: String,
    },
    VoteRecorded {
        round: u8,
        voter_count: usize,
    },
    SummaryRevealed {
        reader_id: PlayerId,
        assigned_strategy: Strategy,
        stake: u32,
        votes: BTreeMap<PlayerId, Strategy>,
        outcome: OutcomeSummary,
        deltas: BTreeMap<PlayerId, i64>,
    },
    DiscussionStarted {},
    ReadyMarked {
        player_id: PlayerId,
    },
    RevoteStarted {},
    FinalSummaryRevealed {
        votes: BTreeMap<PlayerId, Strategy>,
        persuasion_deltas: BTreeMap<PlayerId, u32>,
    },
    MovementWindow {
        mover_id: PlayerId,
    },
    PowerCardPlayed {
        player_id: PlayerId,
        kind: PowerCardKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<PlayerId>,
    },
    MovementResolved {
        mover_id: PlayerId,
        roll: u32,
        event_card: Option<EventCard>,
        positions: BTreeMap<PlayerId, u32>,
    },
    FrozenSkipped {
        player_id: PlayerId,
    },
    TurnVoided {
        reader_id: PlayerId,
    },
    Standings {
        players: Vec<PlayerView>,
    },
    PlayerPresence {
        player_id: PlayerId,
        connected: bool,
    },
    ChatRelayed {
        sender: PlayerId,
        text: String,
    },
    RematchRequested {
        player_id: PlayerId,
        count: usize,
        needed: usize,
    },
    GameOver {
        winner_id: PlayerId,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        request_id: Option<String>,
        code: String,
        message: String,
    },
}

impl ServerEvent {
    pub const TYPES: [&'static str; 25] = [
        "welcome",
        "lobby_state",
        "game_started",
        "phase_changed",
        "turn_assigned",
        "stake_altered",
        "strategy_swapped",
        "se_posted",
        "vote_recorded",
        "summary_revealed",
        "discussion_started",
        "ready_marked",
        "revote_started",
        "final_summary_revealed",
        "movement_window",
        "power_card_played",
        "movement_resolved",
        "frozen_skipped",
        "turn_voided",
        "standings",
        "player_presence",
        "chat_relayed",
        "rematch_requested",
        "game_over",
        "error",
    ];

    pub fn error(request_id: Option<String>, code: &str, message: impl Into<String>) -> Self {
        ServerEvent::Error {
            request_id,
            code: code.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Message {
    Command(ClientCommand),
    Event(ServerEvent),
}

impl Message {
    pub fn type_name(&self) -> String {
        let value = match self {
            Message::Command(c) => serde_json::to_value(c),
            Message::Event(e) => serde_json::to_value(e),
        }
        .expect("messages serialize");
        value["type"].as_str().unwrap_or_default().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: Option<u64>,
    pub id: Option<String>,
    pub body: Message,
}

impl Envelope {
    pub fn command(id: Option<String>, command: ClientCommand) -> Self {
        Envelope {
            seq: None,
            id,
            body: Message::Command(command),
        }
    }

    pub fn event(seq: u64, event: ServerEvent) -> Self {
        Envelope {
            seq: Some(seq),
            id: None,
            body: Message::Event(event),
        }
    }
}

/// One sample of every message type, used for golden lines and round trips.
pub fn catalogue() -> Vec<Envelope> {
    use crate::content::sample_pack;
    let p = |s: &str| PlayerId::from(s);
    let view = |hand: Option<Vec<PowerCardKind>>| PlayerView {
        player_id: p("p1"),
        name: "Ada".into(),
        position: 7,
        points: 12,
        hand_size: 1,
        hand,
        frozen: false,
        connected: true,
    };
    let mut target_view = sample_pack().target_view(1).expect("sample target");
    target_view.assigned_strategy = None;
    let votes = BTreeMap::from([(p("p2"), Strategy::Bridging), (p("p3"), Strategy::Elaboration)]);
    let commands = vec![
        ClientCommand::Join { name: "Ada".into(), lobby: Some("L1".into()) },
        ClientCommand::CreateLobby {
            config_overrides: serde_json::json!({"board_length": 30}),
            pack: Some("sample".into()),
        },
        ClientCommand::StartGame {},
        ClientCommand::SubmitSE { text: "It grows first, so it can split later.".into() },
        ClientCommand::Vote { strategy: Strategy::Bridging },
        ClientCommand::Chat { text: "hi".into() },
        ClientCommand::PlayPowerCard { kind: PowerCardKind::FreezePlayer, target: Some(p("p2")) },
        ClientCommand::AlterStake {},
        ClientCommand::SwapStrategy {},
        ClientCommand::Roll {},
        ClientCommand::Ready {},
        ClientCommand::Rematch {},
        ClientCommand::Leave {},
    ];
    let events = vec![
        ServerEvent::Welcome { player_id: p("p1"), protocol: PROTOCOL_VERSION.into() },
        ServerEvent::LobbyState {
            lobby_id: "L1".into(),
            host_id: p("p1"),
            members: vec![MemberInfo { player_id: p("p1"), name: "Ada".into(), connected: true }],
            pack: "sample".into(),
            status: LobbyStatus::Waiting,
            config: GameConfig::default(),
        },
        ServerEvent::GameStarted {
            snapshot: Snapshot {
                phase: Phase::Reading,
                reader_id: p("p1"),
                board_length: 40,
                pack_title: "How cells divide".into(),
                players: vec![view(None)],
                config: GameConfig::default(),
            },
        },
        ServerEvent::PhaseChanged { from: Phase::Reading, to: Phase::Identification },
        ServerEvent::TurnAssigned { reader_id: p("p1"), target_view, stake: None },
        ServerEvent::StakeAltered { reader_id: p("p1"), stake: Some(20) },
        ServerEvent::StrategySwapped { reader_id: p("p1"), strategy: None, stake: None },
        ServerEvent::SEPosted { reader_id: p("p1"), text: "line one\nline two".into() },
        ServerEvent::VoteRecorded { round: 1, voter_count: 2 },
        ServerEvent::SummaryRevealed {
            reader_id: p("p1"),
            assigned_strategy: Strategy::Bridging,
            stake: 10,
            votes: votes.clone(),
            outcome: OutcomeSummary {
                majority_strategy: Some(Strategy::Bridging),
                reader_in_majority: true,
                unanimous: false,
            },
            deltas: BTreeMap::from([(p("p1"), 10), (p("p2"), 5), (p("p3"), 0)]),
        },
        ServerEvent::DiscussionStarted {},
        ServerEvent::ReadyMarked { player_id: p("p2") },
        ServerEvent::RevoteStarted {},
        ServerEvent::FinalSummaryRevealed {
            votes,
            persuasion_deltas: BTreeMap::from([(p("p1"), 2), (p("p2"), 2), (p("p3"), 0)]),
        },
        ServerEvent::MovementWindow { mover_id: p("p1") },
        ServerEvent::PowerCardPlayed {
            player_id: p("p1"),
            kind: PowerCardKind::FreezePlayer,
            target: Some(p("p2")),
        },
        ServerEvent::MovementResolved {
            mover_id: p("p1"),
            roll: 4,
            event_card: Some(EventCard::MoveBackward(2)),
            positions: BTreeMap::from([(p("p1"), 9), (p("p2"), 3)]),
        },
        ServerEvent::FrozenSkipped { player_id: p("p2") },
        ServerEvent::TurnVoided { reader_id: p("p3") },
        ServerEvent::Standings { players: vec![view(Some(vec![PowerCardKind::ExtraDraw]))] },
        ServerEvent::PlayerPresence { player_id: p("p3"), connected: false },
        ServerEvent::ChatRelayed { sender: p("p2"), text: "I read it as a bridge".into() },
        ServerEvent::RematchRequested { player_id: p("p1"), count: 1, needed: 3 },
        ServerEvent::GameOver { winner_id: p("p1") },
        ServerEvent::error(Some("r7".into()), "WrongPhase", "not allowed during Reading"),
    ];
    let mut out: Vec<Envelope> = commands
        .into_iter()
        .enumerate()
        .map(|(i, c)| Envelope::command(Some(format!("r{i}")), c))
        .collect();
    out.extend(
        events
            .into_iter()
            .enumerate()
            .map(|(i, e)| Envelope::event(i as u64 + 1, e)),
    );
    out
}
