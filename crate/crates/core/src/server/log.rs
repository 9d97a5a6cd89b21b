//! Append-only session logs and deterministic replay.
//!
//! A log is text, one canonical JSON envelope per line (the wire codec's
//! encoding):
//!
//! ```text
//! {"payload":{...header...},"type":"header"}
//! {"payload":{"actor":"p2","at":1532,"input":{"command":{...},"kind":"command"}},"type":"entry"}
//! ...
//! {"payload":{"digest":"9f2c...","entries":57,"phase":"finished","turns":41},"type":"checkpoint"}
//! ```
//!
//! The header pins everything the game was created from (config, pack,
//! seed, roster). Entries record every input in arrival order, including
//! ones the rules rejected, which replay rejects identically. Checkpoints
//! carry the state digest after the preceding entries; a complete log ends
//! with one.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::GameConfig;
use crate::content::TextPack;
use crate::game::{Action, GameError, GameState, Phase, PlayerId, TimerEvent};
use crate::protocol::{encode_line, ClientCommand, PROTOCOL_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub player_id: PlayerId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub protocol: String,
    pub lobby_id: String,
    pub config: GameConfig,
    pub pack: TextPack,
    pub pack_digest: String,
    pub seed: u64,
    pub roster: Vec<RosterEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogInput {
    Command { command: ClientCommand },
    Timer { timer: TimerEvent },
    /// Transport-level connect or disconnect.
    Presence { connected: bool },
    /// Unanimous rematch; the seed of the new game.
    Rematch { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    /// Milliseconds on the session clock; informational only.
    pub at: u64,
    pub actor: Option<PlayerId>,
    pub input: LogInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub entries: u64,
    pub turns: u64,
    pub phase: Phase,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum LogRecord {
    Header(LogHeader),
    Entry(LogEntry),
    Checkpoint(Checkpoint),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("corrupt log: {0}")]
    CorruptLog(String),
    #[error("unsupported protocol version `{0}`")]
    VersionMismatch(String),
}

/// The game effect of a logged input, if any.
pub fn input_action(actor: Option<&PlayerId>, input: &LogInput) -> Option<Action> {
    match input {
        LogInput::Timer { timer } => Some(Action::Timer(*timer)),
        LogInput::Rematch { seed } => Some(Action::Rematch { seed: *seed }),
        LogInput::Presence { connected } => Some(Action::SetConnected {
            player: actor?.clone(),
            connected: *connected,
        }),
        LogInput::Command { command } => command_action(actor?, command),
    }
}

/// Maps a player's wire command onto the rules engine.
pub fn command_action(player: &PlayerId, command: &ClientCommand) -> Option<Action> {
    let player = player.clone();
    Some(match command {
        ClientCommand::SubmitSE { text } => Action::SubmitSelfExplanation {
            player,
            text: text.clone(),
        },
        ClientCommand::Vote { strategy } => Action::Vote {
            player,
            strategy: *strategy,
        },
        ClientCommand::Ready {} => Action::Ready { player },
        ClientCommand::PlayPowerCard { kind, target } => Action::PlayPowerCard {
            player,
            kind: *kind,
            target: target.clone(),
        },
        ClientCommand::AlterStake {} => Action::AlterStake { player },
        ClientCommand::SwapStrategy {} => Action::SwapStrategy { player },
        ClientCommand::Roll {} => Action::Roll { player },
        ClientCommand::Leave {} => Action::SetConnected {
            player,
            connected: false,
        },
        ClientCommand::Join { .. } => Action::SetConnected {
            player,
            connected: true,
        },
        ClientCommand::CreateLobby { .. }
        | ClientCommand::StartGame {}
        | ClientCommand::Chat { .. }
        | ClientCommand::Rematch {} => return None,
    })
}

/// In-memory log with a cursor of lines not yet flushed to storage.
#[derive(Debug, Clone)]
pub struct SessionLog {
    lines: Vec<String>,
    flushed: usize,
    entries: u64,
}

impl SessionLog {
    pub fn new(header: LogHeader) -> Self {
        let mut log = SessionLog {
            lines: Vec::new(),
            flushed: 0,
            entries: 0,
        };
        log.push(&LogRecord::Header(header));
        log
    }

    fn push(&mut self, record: &LogRecord) {
        self.lines
            .push(encode_line(record).expect("log records always encode"));
    }

    pub fn append(&mut self, entry: LogEntry) {
        self.entries += 1;
        self.push(&LogRecord::Entry(entry));
    }

    pub fn checkpoint(&mut self, state: &GameState) {
        let record = LogRecord::Checkpoint(Checkpoint {
            entries: self.entries,
            turns: state.turns_completed,
            phase: state.phase,
            digest: state.digest(),
        });
        self.push(&record);
    }

    pub fn entry_count(&self) -> u64 {
        self.entries
    }

    /// Lines appended since the last call.
    pub fn take_unflushed(&mut self) -> Vec<String> {
        let out = self.lines[self.flushed..].to_vec();
        self.flushed = self.lines.len();
        out
    }

    pub fn text(&self) -> String {
        self.lines.concat()
    }
}

#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub state: GameState,
    pub digest: String,
    pub entries: u64,
    pub checkpoints: usize,
    pub header: LogHeader,
}

/// Rebuilds the game from a complete log, verifying every checkpoint.
pub fn replay(log: &str) -> Result<ReplayReport, ReplayError> {
    let corrupt = |msg: String| ReplayError::CorruptLog(msg);
    if log.is_empty() {
        return Err(corrupt("empty log".into()));
    }
    if !log.ends_with('\n') {
        return Err(corrupt("last line is truncated".into()));
    }
    let mut records = log.lines().enumerate().map(|(i, line)| {
        serde_json::from_str::<LogRecord>(line).map_err(|e| corrupt(format!("line {}: {e}", i + 1)))
    });

    let header = match records.next() {
        Some(Ok(LogRecord::Header(h))) => h,
        Some(Ok(_)) => return Err(corrupt("first line is not a header".into())),
        Some(Err(e)) => return Err(e),
        None => return Err(corrupt("empty log".into())),
    };
    if header.protocol != PROTOCOL_VERSION {
        return Err(ReplayError::VersionMismatch(header.protocol));
    }
    if header.pack.digest() != header.pack_digest {
        return Err(corrupt("pack digest mismatch".into()));
    }
    let roster: Vec<(PlayerId, String)> = header
        .roster
        .iter()
        .map(|r| (r.player_id.clone(), r.name.clone()))
        .collect();
    let mut state = GameState::new(
        header.config.clone(),
        Arc::new(header.pack.clone()),
        &roster,
        header.seed,
    )
    .map_err(|e: GameError| corrupt(format!("header does not start a game: {e}")))?;

    let mut entries = 0u64;
    let mut checkpoints = 0usize;
    let mut ended_with_checkpoint = false;
    for record in records {
        match record? {
            LogRecord::Header(_) => return Err(corrupt("repeated header".into())),
            LogRecord::Entry(entry) => {
                entries += 1;
                ended_with_checkpoint = false;
                if let Some(action) = input_action(entry.actor.as_ref(), &entry.input) {
                    // Rejected inputs were rejected live too and changed nothing.
                    let _ = state.apply(&action);
                }
            }
            LogRecord::Checkpoint(cp) => {
                if cp.entries != entries {
                    return Err(corrupt(format!(
                        "checkpoint claims {} entries, found {entries}",
                        cp.entries
                    )));
                }
                let digest = state.digest();
                if cp.digest != digest {
                    return Err(corrupt(format!("digest mismatch after {entries} entries")));
                }
                checkpoints += 1;
                ended_with_checkpoint = true;
            }
        }
    }
    if !ended_with_checkpoint {
        return Err(corrupt("log does not end with a checkpoint".into()));
    }
    Ok(ReplayReport {
        digest: state.digest(),
        state,
        entries,
        checkpoints,
        header,
    })
}
