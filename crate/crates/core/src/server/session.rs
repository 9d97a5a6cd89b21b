//! One lobby and the game played in it.
//!
//! A `Session` does no I/O and reads no clock: callers pass `now` (session
//! milliseconds) and get back the redacted events each member should
//! receive. All mutations go through `&mut self`, so whoever owns the
//! session serializes them.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::content::TextPack;
use crate::game::{GameEvent, GameState, Phase, PlayerId, TimerEvent};
use crate::protocol::{
    redact_for, ClientCommand, LobbyStatus, OutcomeSummary, PlayerView, ServerEvent, Snapshot,
    PROTOCOL_VERSION,
};

use super::lobby::{join_lobby, Lobby, LobbyError, Member};
use super::log::{command_action, LogEntry, LogHeader, LogInput, RosterEntry, SessionLog};

/// An event addressed to one member, already redacted for them.
#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub to: PlayerId,
    pub event: ServerEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ArmedTimer {
    timer: TimerEvent,
    /// Identifies the phase instance the timer belongs to.
    key: (Phase, u64),
    due: u64,
}

pub struct Session {
    lobby: Lobby,
    pack: Arc<TextPack>,
    game: Option<GameState>,
    log: Option<SessionLog>,
    rematch_votes: BTreeSet<PlayerId>,
    timer: Option<ArmedTimer>,
    last_standings: Option<Vec<PlayerView>>,
}

/// Phases in which chat is relayed.
pub fn chat_open(phase: Phase) -> bool {
    !matches!(phase, Phase::Reading | Phase::Identification | Phase::Revote)
}

impl Session {
    pub fn new(lobby: Lobby, pack: Arc<TextPack>) -> Self {
        Session {
            lobby,
            pack,
            game: None,
            log: None,
            rematch_votes: BTreeSet::new(),
            timer: None,
            last_standings: None,
        }
    }

    pub fn lobby(&self) -> &Lobby {
        &self.lobby
    }

    pub fn game(&self) -> Option<&GameState> {
        self.game.as_ref()
    }

    pub fn log_text(&self) -> Option<String> {
        self.log.as_ref().map(SessionLog::text)
    }

    /// Log lines not yet handed out.
    pub fn take_log_lines(&mut self) -> Vec<String> {
        self.log
            .as_mut()
            .map(SessionLog::take_unflushed)
            .unwrap_or_default()
    }

    pub fn connected_members(&self) -> usize {
        self.lobby.members.iter().filter(|m| m.connected).count()
    }

    /// Deadline of the armed timer, if any.
    pub fn next_deadline(&self) -> Option<u64> {
        self.timer.map(|t| t.due)
    }

    pub fn lobby_state(&self) -> Vec<Outbound> {
        self.broadcast(self.lobby.state_event())
    }

    /// Adds a member, or reconnects a disconnected one with the same name.
    /// Returns the id the player is known by in this session.
    pub fn join(
        &mut self,
        candidate: PlayerId,
        name: &str,
        now: u64,
    ) -> Result<(PlayerId, Vec<Outbound>), LobbyError> {
        if let Some(existing) = self.lobby.member_by_name(name) {
            if existing.connected {
                return Err(LobbyError::DuplicateName(name.to_string()));
            }
            let id = existing.player_id.clone();
            return Ok((id.clone(), self.reconnect(&id, name, now)));
        }
        join_lobby(
            &mut self.lobby,
            Member {
                player_id: candidate.clone(),
                name: name.to_string(),
                connected: true,
            },
        )?;
        Ok((candidate, self.lobby_state()))
    }

    fn reconnect(&mut self, id: &PlayerId, name: &str, now: u64) -> Vec<Outbound> {
        if let Some(m) = self.lobby.member_mut(id) {
            m.connected = true;
        }
        let mut out = self.lobby_state();
        if self.game.is_some() {
            let command = ClientCommand::Join {
                name: name.to_string(),
                lobby: Some(self.lobby.lobby_id.clone()),
            };
            out.extend(self.apply_logged(Some(id), LogInput::Command { command }, None, now));
            let game = self.game.as_ref().expect("checked");
            out.push(Outbound {
                to: id.clone(),
                event: redact_for(id, &ServerEvent::GameStarted { snapshot: snapshot(game) }, game),
            });
            if let Some(ev) = current_turn_event(game) {
                out.push(Outbound {
                    to: id.clone(),
                    event: redact_for(id, &ev, game),
                });
            }
        }
        out
    }

    pub fn start_game(
        &mut self,
        requester: &PlayerId,
        seed: u64,
        now: u64,
    ) -> Result<Vec<Outbound>, LobbyError> {
        if self.lobby.status != LobbyStatus::Waiting {
            return Err(LobbyError::AlreadyStarted);
        }
        if requester != &self.lobby.host_id {
            return Err(LobbyError::NotHost);
        }
        if self.lobby.members.len() < self.lobby.config.min_players {
            return Err(LobbyError::NotEnoughPlayers(self.lobby.config.min_players));
        }
        let roster: Vec<(PlayerId, String)> = self
            .lobby
            .members
            .iter()
            .map(|m| (m.player_id.clone(), m.name.clone()))
            .collect();
        let game = GameState::new(self.lobby.config.clone(), self.pack.clone(), &roster, seed)
            .map_err(|e| match e {
                crate::game::GameError::InvalidConfig(c) => LobbyError::InvalidConfig(c),
                _ => LobbyError::NotEnoughPlayers(self.lobby.config.min_players),
            })?;
        self.log = Some(SessionLog::new(LogHeader {
            protocol: PROTOCOL_VERSION.to_string(),
            lobby_id: self.lobby.lobby_id.clone(),
            config: self.lobby.config.clone(),
            pack: (*self.pack).clone(),
            pack_digest: self.pack.digest(),
            seed,
            roster: roster
                .into_iter()
                .map(|(player_id, name)| RosterEntry { player_id, name })
                .collect(),
        }));
        self.lobby.status = LobbyStatus::InGame;
        self.game = Some(game);
        let mut out = self.lobby_state();
        let game = self.game.as_ref().expect("just set");
        let opening = [
            ServerEvent::GameStarted { snapshot: snapshot(game) },
            ServerEvent::PhaseChanged { from: Phase::Lobby, to: Phase::Reading },
            current_turn_event(game).expect("a new game has a turn"),
        ];
        for ev in opening {
            out.extend(self.broadcast(ev));
        }
        self.last_standings = Some(standings(game));
        self.rearm(now);
        Ok(out)
    }

    /// Runs one command from a member. Rule violations come back as an
    /// `Error` event to the sender only.
    pub fn handle_command(
        &mut self,
        player: &PlayerId,
        request_id: Option<String>,
        command: ClientCommand,
        now: u64,
        seed_source: &mut dyn FnMut() -> u64,
    ) -> Vec<Outbound> {
        let error = |code: &str, message: String| {
            vec![Outbound {
                to: player.clone(),
                event: ServerEvent::error(request_id.clone(), code, message),
            }]
        };
        if self.lobby.member(player).is_none() {
            return error("NotInSession", "not a member of this lobby".into());
        }
        match &command {
            ClientCommand::Join { .. } | ClientCommand::CreateLobby { .. } => {
                let e = LobbyError::AlreadyInLobby;
                return error(e.code(), e.to_string());
            }
            ClientCommand::StartGame {} => {
                return match self.start_game(player, seed_source(), now) {
                    Ok(out) => out,
                    Err(e) => error(e.code(), e.to_string()),
                };
            }
            ClientCommand::Leave {} if self.game.is_none() => {
                self.lobby.remove(player);
                return self.lobby_state();
            }
            _ => {}
        }
        let Some(game) = self.game.as_ref() else {
            if let ClientCommand::Chat { text } = &command {
                return self.broadcast(ServerEvent::ChatRelayed {
                    sender: player.clone(),
                    text: text.clone(),
                });
            }
            return error("WrongPhase", "the game has not started".into());
        };
        let phase = game.phase;

        match &command {
            ClientCommand::Chat { text } => {
                let text = text.clone();
                let _ = self.apply_logged(Some(player), LogInput::Command { command }, None, now);
                if !chat_open(phase) {
                    return error("ChatMuted", format!("chat is closed during {phase:?}"));
                }
                self.broadcast(ServerEvent::ChatRelayed {
                    sender: player.clone(),
                    text,
                })
            }
            ClientCommand::Rematch {} => {
                if phase != Phase::Finished {
                    return error("WrongPhase", format!("not allowed during {phase:?}"));
                }
                let mut out =
                    self.apply_logged(Some(player), LogInput::Command { command }, None, now);
                self.rematch_votes.insert(player.clone());
                let needed = self.connected_members();
                out.extend(self.broadcast(ServerEvent::RematchRequested {
                    player_id: player.clone(),
                    count: self.rematch_votes.len(),
                    needed,
                }));
                let all_in = self
                    .lobby
                    .members
                    .iter()
                    .filter(|m| m.connected)
                    .all(|m| self.rematch_votes.contains(&m.player_id));
                if all_in {
                    self.rematch_votes.clear();
                    let seed = seed_source();
                    out.extend(self.apply_logged(None, LogInput::Rematch { seed }, None, now));
                }
                out
            }
            ClientCommand::Leave {} => {
                if let Some(m) = self.lobby.member_mut(player) {
                    m.connected = false;
                }
                let mut out = self.lobby_state();
                out.extend(self.apply_logged(Some(player), LogInput::Command { command }, None, now));
                out
            }
            _ => self.apply_logged(Some(player), LogInput::Command { command }, request_id, now),
        }
    }

    /// Transport dropped. Waiting members leave; players in a game stay
    /// seated and their obligations run out on timers.
    pub fn disconnect(&mut self, player: &PlayerId, now: u64) -> Vec<Outbound> {
        if self.game.is_none() {
            self.lobby.remove(player);
            return self.lobby_state();
        }
        match self.lobby.member_mut(player) {
            Some(m) if m.connected => m.connected = false,
            _ => return Vec::new(),
        }
        let mut out = self.lobby_state();
        out.extend(self.apply_logged(Some(player), LogInput::Presence { connected: false }, None, now));
        out
    }

    /// Fires a due timer, if any.
    pub fn tick(&mut self, now: u64) -> Vec<Outbound> {
        match self.timer {
            Some(armed) if armed.due <= now => {
                self.timer = None;
                self.apply_logged(None, LogInput::Timer { timer: armed.timer }, None, now)
            }
            _ => Vec::new(),
        }
    }

    /// Writes a closing checkpoint so the log is complete.
    pub fn close(&mut self) {
        if let (Some(log), Some(game)) = (self.log.as_mut(), self.game.as_ref()) {
            log.checkpoint(game);
        }
    }

    /// Logs `input`, applies it, and fans the resulting events out.
    fn apply_logged(
        &mut self,
        actor: Option<&PlayerId>,
        input: LogInput,
        request_id: Option<String>,
        now: u64,
    ) -> Vec<Outbound> {
        let Some(game) = self.game.as_mut() else {
            return Vec::new();
        };
        let action = match (&input, actor) {
            (LogInput::Command { command }, Some(p)) => command_action(p, command),
            _ => super::log::input_action(actor, &input),
        };
        if let Some(log) = self.log.as_mut() {
            log.append(LogEntry {
                at: now,
                actor: actor.cloned(),
                input,
            });
        }
        let Some(action) = action else {
            return Vec::new();
        };
        match game.apply(&action) {
            Ok(events) => {
                let out = self.publish(events);
                self.rearm(now);
                out
            }
            Err(e) => match actor {
                Some(p) => vec![Outbound {
                    to: p.clone(),
                    event: ServerEvent::error(request_id, e.code(), e.to_string()),
                }],
                None => Vec::new(),
            },
        }
    }

    fn publish(&mut self, events: Vec<GameEvent>) -> Vec<Outbound> {
        let game = self.game.as_ref().expect("publishing needs a game");
        let game_over = events.iter().any(|e| matches!(e, GameEvent::GameOver { .. }));
        let mut out = Vec::new();
        for ev in events {
            out.extend(self.broadcast(to_wire(game, ev)));
        }
        let now_standings = standings(game);
        if self.last_standings.as_ref() != Some(&now_standings) {
            out.extend(self.broadcast(ServerEvent::Standings {
                players: now_standings.clone(),
            }));
            self.last_standings = Some(now_standings);
        }
        if game_over {
            if let Some(log) = self.log.as_mut() {
                log.checkpoint(game);
            }
        }
        out
    }

    fn broadcast(&self, event: ServerEvent) -> Vec<Outbound> {
        self.lobby
            .members
            .iter()
            .filter(|m| m.connected)
            .map(|m| Outbound {
                to: m.player_id.clone(),
                event: match &self.game {
                    Some(game) => redact_for(&m.player_id, &event, game),
                    None => event.clone(),
                },
            })
            .collect()
    }

    fn rearm(&mut self, now: u64) {
        let Some(game) = self.game.as_ref() else {
            self.timer = None;
            return;
        };
        let cfg = &game.config;
        let wanted = match game.phase {
            Phase::Identification => Some((TimerEvent::VoteTimeout { round: 1 }, cfg.vote_timeout)),
            Phase::Revote => Some((TimerEvent::VoteTimeout { round: 2 }, cfg.vote_timeout)),
            Phase::Discussion => Some((TimerEvent::DiscussionTimeout, cfg.discussion_timeout)),
            Phase::Movement => Some((TimerEvent::PowerCardWindowTimeout, cfg.powercard_window_timeout)),
            Phase::Reading if !game.reader().connected => {
                Some((TimerEvent::ReaderTimeout, cfg.vote_timeout))
            }
            _ => None,
        };
        let key = (game.phase, game.turns_completed);
        self.timer = match (wanted, self.timer) {
            (None, _) => None,
            (Some((timer, _)), Some(armed)) if armed.key == key && armed.timer == timer => Some(armed),
            (Some((timer, secs)), _) => Some(ArmedTimer {
                timer,
                key,
                due: now + secs * 1000,
            }),
        };
    }
}

pub fn snapshot(game: &GameState) -> Snapshot {
    Snapshot {
        phase: game.phase,
        reader_id: game.reader().player_id.clone(),
        board_length: game.config.board_length,
        pack_title: game.pack.title.clone(),
        players: standings(game),
        config: game.config.clone(),
    }
}

pub fn standings(game: &GameState) -> Vec<PlayerView> {
    game.players
        .iter()
        .map(|p| PlayerView {
            player_id: p.player_id.clone(),
            name: p.display_name.clone(),
            position: p.token_position,
            points: p.points,
            hand_size: p.hand.len(),
            hand: Some(p.hand.clone()),
            frozen: p.frozen,
            connected: p.connected,
        })
        .collect()
}

/// `TurnAssigned` for the turn in progress, unredacted.
pub fn current_turn_event(game: &GameState) -> Option<ServerEvent> {
    let turn = game.turn.as_ref()?;
    Some(ServerEvent::TurnAssigned {
        reader_id: turn.reader_id.clone(),
        target_view: game.target_view()?,
        stake: Some(turn.stake),
    })
}

/// Translates a rules event into its (unredacted) wire form.
pub fn to_wire(game: &GameState, event: GameEvent) -> ServerEvent {
    match event {
        GameEvent::PhaseChanged { from, to } => ServerEvent::PhaseChanged { from, to },
        GameEvent::TurnAssigned {
            reader,
            target_index,
            assigned_strategy,
            stake,
        } => {
            let mut target_view = game
                .pack
                .target_view(target_index)
                .expect("turn targets index the pack");
            target_view.assigned_strategy = Some(assigned_strategy);
            ServerEvent::TurnAssigned {
                reader_id: reader,
                target_view,
                stake: Some(stake),
            }
        }
        GameEvent::StakeAltered { reader, stake } => ServerEvent::StakeAltered {
            reader_id: reader,
            stake: Some(stake),
        },
        GameEvent::StrategySwapped {
            reader,
            strategy,
            stake,
        } => ServerEvent::StrategySwapped {
            reader_id: reader,
            strategy: Some(strategy),
            stake: Some(stake),
        },
        GameEvent::SelfExplanationPosted { reader, text } => ServerEvent::SEPosted {
            reader_id: reader,
            text,
        },
        GameEvent::VoteRecorded { round, voter_count } => {
            ServerEvent::VoteRecorded { round, voter_count }
        }
        GameEvent::SummaryRevealed {
            reader,
            assigned_strategy,
            stake,
            votes,
            outcome,
        } => ServerEvent::SummaryRevealed {
            reader_id: reader,
            assigned_strategy,
            stake,
            votes,
            outcome: OutcomeSummary {
                majority_strategy: outcome.majority_strategy,
                reader_in_majority: outcome.reader_in_majority,
                unanimous: outcome.unanimous,
            },
            deltas: outcome.deltas,
        },
        GameEvent::DiscussionStarted => ServerEvent::DiscussionStarted {},
        GameEvent::ReadyMarked { player } => ServerEvent::ReadyMarked { player_id: player },
        GameEvent::RevoteStarted => ServerEvent::RevoteStarted {},
        GameEvent::FinalSummaryRevealed { votes, persuasion } => {
            ServerEvent::FinalSummaryRevealed {
                votes,
                persuasion_deltas: persuasion,
            }
        }
        GameEvent::MovementWindow { mover } => ServerEvent::MovementWindow { mover_id: mover },
        GameEvent::PowerCardPlayed {
            player,
            kind,
            target,
        } => ServerEvent::PowerCardPlayed {
            player_id: player,
            kind,
            target,
        },
        GameEvent::MovementResolved {
            mover,
            roll,
            event_card,
            positions,
        } => ServerEvent::MovementResolved {
            mover_id: mover,
            roll,
            event_card,
            positions,
        },
        GameEvent::FrozenSkipped { player } => ServerEvent::FrozenSkipped { player_id: player },
        GameEvent::TurnVoided { reader } => ServerEvent::TurnVoided { reader_id: reader },
        GameEvent::PresenceChanged { player, connected } => ServerEvent::PlayerPresence {
            player_id: player,
            connected,
        },
        GameEvent::GameOver { winner } => ServerEvent::GameOver { winner_id: winner },
        GameEvent::GameReset => ServerEvent::GameStarted {
            snapshot: snapshot(game),
        },
    }
}
