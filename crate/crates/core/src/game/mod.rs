//! The rules engine.
//!
//! [`GameState`] is the authoritative state of one game. It changes only
//! through [`GameState::apply`] (or the named operation methods that `apply`
//! dispatches to), each of which validates fully before mutating: a rejected
//! action leaves the state untouched. All randomness comes from the state's
//! own [`GameRng`], so a seed plus an action sequence determines everything.
//!
//! Phase graph:
//!
//! ```text
//! Lobby -> Reading -> Identification -> Summary -> Movement
//!                                               \-> Discussion -> Revote -> FinalSummary -> Movement
//! Movement -> Reading | Finished
//! Finished -> Lobby (rematch)
//! ```
//!
//! `Summary` and `FinalSummary` resolve as soon as their awards are applied,
//! so a caller never observes a state resting in either phase.

pub mod cards;
pub mod scoring;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, GameConfig};
use crate::content::{PackError, TargetView, TextPack};
use crate::rng::GameRng;
use crate::strategy::Strategy;

use cards::{Deck, EventCard, PowerCardKind};
use scoring::{VoteOutcome, Votes};

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub String);

impl PlayerId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for PlayerId {
    fn from(s: &str) -> Self {
        PlayerId(s.to_string())
    }
}

impl From<String> for PlayerId {
    fn from(s: String) -> Self {
        PlayerId(s)
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Lobby,
    Reading,
    Identification,
    Summary,
    Discussion,
    Revote,
    FinalSummary,
    Movement,
    Finished,
}

impl Phase {
    pub const ALL: [Phase; 9] = [
        Phase::Lobby,
        Phase::Reading,
        Phase::Identification,
        Phase::Summary,
        Phase::Discussion,
        Phase::Revote,
        Phase::FinalSummary,
        Phase::Movement,
        Phase::Finished,
    ];

    /// Whether `self -> to` is an edge of the phase graph.
    pub fn can_transition_to(self, to: Phase) -> bool {
        use Phase::*;
        matches!(
            (self, to),
            (Lobby, Reading)
                | (Reading, Identification)
                | (Identification, Summary)
                | (Summary, Movement)
                | (Summary, Discussion)
                | (Discussion, Revote)
                | (Revote, FinalSummary)
                | (FinalSummary, Movement)
                | (Movement, Reading)
                | (Movement, Finished)
                | (Finished, Lobby)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerState {
    pub player_id: PlayerId,
    pub display_name: String,
    pub token_position: u32,
    pub points: u32,
    pub hand: Vec<PowerCardKind>,
    pub frozen: bool,
    pub connected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub reader_id: PlayerId,
    pub target_index: usize,
    pub assigned_strategy: Strategy,
    pub stake: u32,
    pub stake_altered: bool,
    pub strategy_swapped: bool,
    pub self_explanation: Option<String>,
    pub round1_votes: Votes,
    pub round2_votes: Option<Votes>,
    pub outcome: Option<VoteOutcome>,
    pub persuasion: Option<BTreeMap<PlayerId, u32>>,
    pub ready: BTreeSet<PlayerId>,
}

/// Deadline-driven inputs, fired by whoever owns the clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimerEvent {
    VoteTimeout { round: u8 },
    DiscussionTimeout,
    PowerCardWindowTimeout,
    /// The reader is disconnected and the reading window ran out.
    ReaderTimeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    AlterStake { player: PlayerId },
    SwapStrategy { player: PlayerId },
    SubmitSelfExplanation { player: PlayerId, text: String },
    Vote { player: PlayerId, strategy: Strategy },
    Ready { player: PlayerId },
    PlayPowerCard {
        player: PlayerId,
        kind: PowerCardKind,
        target: Option<PlayerId>,
    },
    Roll { player: PlayerId },
    SetConnected { player: PlayerId, connected: bool },
    Timer(TimerEvent),
    Rematch { seed: u64 },
}

/// Everything observable that an action caused, in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum GameEvent {
    PhaseChanged { from: Phase, to: Phase },
    TurnAssigned {
        reader: PlayerId,
        target_index: usize,
        assigned_strategy: Strategy,
        stake: u32,
    },
    StakeAltered { reader: PlayerId, stake: u32 },
    StrategySwapped {
        reader: PlayerId,
        strategy: Strategy,
        stake: u32,
    },
    SelfExplanationPosted { reader: PlayerId, text: String },
    VoteRecorded { round: u8, voter_count: usize },
    SummaryRevealed {
        reader: PlayerId,
        assigned_strategy: Strategy,
        stake: u32,
        votes: Votes,
        outcome: VoteOutcome,
    },
    DiscussionStarted,
    ReadyMarked { player: PlayerId },
    RevoteStarted,
    FinalSummaryRevealed {
        votes: Votes,
        persuasion: BTreeMap<PlayerId, u32>,
    },
    MovementWindow { mover: PlayerId },
    PowerCardPlayed {
        player: PlayerId,
        kind: PowerCardKind,
        target: Option<PlayerId>,
    },
    MovementResolved {
        mover: PlayerId,
        roll: u32,
        event_card: Option<EventCard>,
        positions: BTreeMap<PlayerId, u32>,
    },
    FrozenSkipped { player: PlayerId },
    TurnVoided { reader: PlayerId },
    PresenceChanged { player: PlayerId, connected: bool },
    GameOver { winner: PlayerId },
    GameReset,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error(transparent)]
    InvalidConfig(#[from] ConfigError),
    #[error("roster of {got} outside {min}..={max}")]
    RosterSizeOutOfRange { got: usize, min: usize, max: usize },
    #[error("duplicate player id {0}")]
    DuplicatePlayerId(PlayerId),
    #[error(transparent)]
    InvalidPack(#[from] PackError),
    #[error("unknown player {0}")]
    UnknownPlayer(PlayerId),
    #[error("only the reader may do that")]
    NotReader,
    #[error("not allowed during {0:?}")]
    WrongPhase(Phase),
    #[error("needs {need} points, has {have}")]
    InsufficientPoints { need: u32, have: u32 },
    #[error("stake already altered this turn")]
    AlreadyAltered,
    #[error("strategy already swapped this turn")]
    AlreadySwapped,
    #[error("self-explanation is empty")]
    EmptyExplanation,
    #[error("the reader does not vote")]
    ReaderCannotVote,
    #[error("already voted this round")]
    AlreadyVoted,
    #[error("only round-1 voters take part in the re-vote")]
    NotEligibleToVote,
    #[error("already marked ready")]
    AlreadyReady,
    #[error("it is not this player's move")]
    NotCurrentPlayer,
    #[error("card not in hand")]
    CardNotHeld,
    #[error("invalid power card target")]
    InvalidTarget,
    #[error("an extra turn is already pending")]
    ExtraTurnPending,
    #[error("the reader is still connected")]
    ReaderConnected,
}

impl GameError {
    /// Stable wire code.
    pub fn code(&self) -> &'static str {
        match self {
            GameError::InvalidConfig(_) => "InvalidConfig",
            GameError::RosterSizeOutOfRange { .. } => "RosterSizeOutOfRange",
            GameError::DuplicatePlayerId(_) => "DuplicatePlayerId",
            GameError::InvalidPack(_) => "InvalidPack",
            GameError::UnknownPlayer(_) => "UnknownPlayer",
            GameError::NotReader => "NotReader",
            GameError::WrongPhase(_) => "WrongPhase",
            GameError::InsufficientPoints { .. } => "InsufficientPoints",
            GameError::AlreadyAltered => "AlreadyAltered",
            GameError::AlreadySwapped => "AlreadySwapped",
            GameError::EmptyExplanation => "EmptyExplanation",
            GameError::ReaderCannotVote => "ReaderCannotVote",
            GameError::AlreadyVoted => "AlreadyVoted",
            GameError::NotEligibleToVote => "NotEligibleToVote",
            GameError::AlreadyReady => "AlreadyReady",
            GameError::NotCurrentPlayer => "NotCurrentPlayer",
            GameError::CardNotHeld => "CardNotHeld",
            GameError::InvalidTarget => "InvalidTarget",
            GameError::ExtraTurnPending => "ExtraTurnPending",
            GameError::ReaderConnected => "ReaderConnected",
        }
    }
}

pub type GameResult<T> = Result<T, GameError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub config: GameConfig,
    pub pack: Arc<TextPack>,
    pub players: Vec<PlayerState>,
    pub reader_index: usize,
    pub phase: Phase,
    pub turn: Option<TurnRecord>,
    pub target_cursor: usize,
    pub event_deck: Deck<EventCard>,
    pub power_deck: Deck<PowerCardKind>,
    pub rng: GameRng,
    pub extra_turn_pending: bool,
    pub winner: Option<PlayerId>,
    /// Reader turns finished so far (voided turns included).
    pub turns_completed: u64,
}

impl GameState {
    /// Starts a game: everyone at cell 0 with no points or cards, decks
    /// shuffled from `seed`, and the first reader (roster order) assigned a
    /// target.
    pub fn new(
        config: GameConfig,
        pack: Arc<TextPack>,
        roster: &[(PlayerId, String)],
        seed: u64,
    ) -> GameResult<Self> {
        config.validate()?;
        if roster.len() < config.min_players || roster.len() > config.max_players {
            return Err(GameError::RosterSizeOutOfRange {
                got: roster.len(),
                min: config.min_players,
                max: config.max_players,
            });
        }
        let mut seen = BTreeSet::new();
        for (id, _) in roster {
            if !seen.insert(id) {
                return Err(GameError::DuplicatePlayerId(id.clone()));
            }
        }
        pack.validate()?;

        let mut rng = GameRng::from_seed(seed);
        let event_deck = Deck::shuffled(&config.event_deck_spec, &mut rng);
        let power_deck = Deck::shuffled(&config.power_deck_spec, &mut rng);
        let players = roster
            .iter()
            .map(|(id, name)| PlayerState {
                player_id: id.clone(),
                display_name: name.clone(),
                token_position: 0,
                points: 0,
                hand: Vec::new(),
                frozen: false,
                connected: true,
            })
            .collect();
        let mut state = GameState {
            config,
            pack,
            players,
            reader_index: 0,
            phase: Phase::Lobby,
            turn: None,
            target_cursor: 0,
            event_deck,
            power_deck,
            rng,
            extra_turn_pending: false,
            winner: None,
            turns_completed: 0,
        };
        let mut events = Vec::new();
        state.set_phase(Phase::Reading, &mut events);
        state.begin_reading(&mut events);
        Ok(state)
    }

    /// Applies one action. On error nothing changed.
    pub fn apply(&mut self, action: &Action) -> GameResult<Vec<GameEvent>> {
        match action {
            Action::AlterStake { player } => self.alter_stake(player),
            Action::SwapStrategy { player } => self.swap_strategy(player),
            Action::SubmitSelfExplanation { player, text } => {
                self.submit_self_explanation(player, text)
            }
            Action::Vote { player, strategy } => {
                let round = match self.phase {
                    Phase::Revote => 2,
                    _ => 1,
                };
                self.cast_vote(player, *strategy, round)
            }
            Action::Ready { player } => self.mark_ready(player),
            Action::PlayPowerCard {
                player,
                kind,
                target,
            } => self.play_power_card(player, *kind, target.as_ref()),
            Action::Roll { player } => self.roll(player),
            Action::SetConnected { player, connected } => self.set_connected(player, *connected),
            Action::Timer(timer) => self.fire_timer(*timer),
            Action::Rematch { seed } => self.rematch(*seed),
        }
    }

    // ---- queries ----

    pub fn reader(&self) -> &PlayerState {
        &self.players[self.reader_index]
    }

    pub fn player(&self, id: &PlayerId) -> Option<&PlayerState> {
        self.players.iter().find(|p| &p.player_id == id)
    }

    pub fn player_ids(&self) -> Vec<PlayerId> {
        self.players.iter().map(|p| p.player_id.clone()).collect()
    }

    pub fn positions(&self) -> BTreeMap<PlayerId, u32> {
        self.players
            .iter()
            .map(|p| (p.player_id.clone(), p.token_position))
            .collect()
    }

    /// The current target with its context and assigned strategy.
    pub fn target_view(&self) -> Option<TargetView> {
        let turn = self.turn.as_ref()?;
        let mut view = self.pack.target_view(turn.target_index).ok()?;
        view.assigned_strategy = Some(turn.assigned_strategy);
        Some(view)
    }

    /// Connected players still expected to vote in `round`.
    pub fn pending_voters(&self, round: u8) -> Vec<PlayerId> {
        let Some(turn) = &self.turn else {
            return Vec::new();
        };
        self.players
            .iter()
            .filter(|p| p.connected && p.player_id != turn.reader_id)
            .filter(|p| match round {
                1 => !turn.round1_votes.contains_key(&p.player_id),
                _ => {
                    turn.round1_votes.contains_key(&p.player_id)
                        && !turn
                            .round2_votes
                            .as_ref()
                            .is_some_and(|v| v.contains_key(&p.player_id))
                }
            })
            .map(|p| p.player_id.clone())
            .collect()
    }

    /// Canonical serialization: JSON with object keys sorted.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("state serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// Hex SHA-256 of [`canonical_json`](Self::canonical_json).
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    // ---- reading ----

    pub fn alter_stake(&mut self, player: &PlayerId) -> GameResult<Vec<GameEvent>> {
        self.expect_phase(Phase::Reading)?;
        self.expect_reader(player)?;
        let turn = self.turn.as_ref().expect("reading has a turn");
        if turn.stake_altered {
            return Err(GameError::AlreadyAltered);
        }
        let cost = self.config.stake_alter_cost;
        self.charge(self.reader_index, cost)?;
        let multiplier = self.config.stake_alter_multiplier;
        let turn = self.turn.as_mut().expect("reading has a turn");
        turn.stake = turn.stake.saturating_mul(multiplier);
        turn.stake_altered = true;
        Ok(vec![GameEvent::StakeAltered {
            reader: player.clone(),
            stake: turn.stake,
        }])
    }

    pub fn swap_strategy(&mut self, player: &PlayerId) -> GameResult<Vec<GameEvent>> {
        self.expect_phase(Phase::Reading)?;
        self.expect_reader(player)?;
        let turn = self.turn.as_ref().expect("reading has a turn");
        if turn.strategy_swapped {
            return Err(GameError::AlreadySwapped);
        }
        let others = turn.assigned_strategy.others();
        let cost = self.config.strategy_swap_cost;
        self.charge(self.reader_index, cost)?;
        let strategy = others[self.rng.below(others.len() as u32) as usize];
        let mut stake = self.config.points_for(strategy);
        let turn = self.turn.as_mut().expect("reading has a turn");
        if turn.stake_altered {
            stake = stake.saturating_mul(self.config.stake_alter_multiplier);
        }
        turn.assigned_strategy = strategy;
        turn.stake = stake;
        turn.strategy_swapped = true;
        Ok(vec![GameEvent::StrategySwapped {
            reader: player.clone(),
            strategy,
            stake,
        }])
    }

    pub fn submit_self_explanation(
        &mut self,
        player: &PlayerId,
        text: &str,
    ) -> GameResult<Vec<GameEvent>> {
        self.expect_phase(Phase::Reading)?;
        self.expect_reader(player)?;
        if text.trim().is_empty() {
            return Err(GameError::EmptyExplanation);
        }
        let mut events = vec![GameEvent::SelfExplanationPosted {
            reader: player.clone(),
            text: text.to_string(),
        }];
        self.turn.as_mut().expect("reading has a turn").self_explanation = Some(text.to_string());
        self.set_phase(Phase::Identification, &mut events);
        self.maybe_close_vote(&mut events);
        Ok(events)
    }

    // ---- voting ----

    pub fn cast_vote(
        &mut self,
        player: &PlayerId,
        strategy: Strategy,
        round: u8,
    ) -> GameResult<Vec<GameEvent>> {
        match (self.phase, round) {
            (Phase::Identification, 1) | (Phase::Revote, 2) => {}
            _ => return Err(GameError::WrongPhase(self.phase)),
        }
        self.index_of(player)?;
        let turn = self.turn.as_ref().expect("voting has a turn");
        if &turn.reader_id == player {
            return Err(GameError::ReaderCannotVote);
        }
        let voter_count = if round == 1 {
            if turn.round1_votes.contains_key(player) {
                return Err(GameError::AlreadyVoted);
            }
            let turn = self.turn.as_mut().expect("voting has a turn");
            turn.round1_votes.insert(player.clone(), strategy);
            turn.round1_votes.len()
        } else {
            if !turn.round1_votes.contains_key(player) {
                return Err(GameError::NotEligibleToVote);
            }
            let round2 = turn.round2_votes.as_ref().expect("revote opened");
            if round2.contains_key(player) {
                return Err(GameError::AlreadyVoted);
            }
            let turn = self.turn.as_mut().expect("voting has a turn");
            let round2 = turn.round2_votes.as_mut().expect("revote opened");
            round2.insert(player.clone(), strategy);
            round2.len()
        };
        let mut events = vec![GameEvent::VoteRecorded { round, voter_count }];
        self.maybe_close_vote(&mut events);
        Ok(events)
    }

    fn maybe_close_vote(&mut self, events: &mut Vec<GameEvent>) {
        match self.phase {
            Phase::Identification if self.pending_voters(1).is_empty() => {
                self.close_round1(events)
            }
            Phase::Revote if self.pending_voters(2).is_empty() => self.close_round2(events),
            _ => {}
        }
    }

    fn close_round1(&mut self, events: &mut Vec<GameEvent>) {
        let turn = self.turn.as_ref().expect("voting has a turn");
        let outcome = scoring::tally_votes(
            &turn.round1_votes,
            turn.assigned_strategy,
            self.players.len(),
        );
        self.set_phase(Phase::Summary, events);
        self.apply_stake_awards(outcome, events);
        self.resolve_summary(events);
    }

    /// Pays round-1 stake awards (and the agreement bonus) and reveals them.
    fn apply_stake_awards(&mut self, mut outcome: VoteOutcome, events: &mut Vec<GameEvent>) {
        debug_assert_eq!(self.phase, Phase::Summary);
        let ids = self.player_ids();
        let turn = self.turn.as_ref().expect("summary has a turn");
        outcome.deltas = scoring::stake_deltas(
            &outcome,
            &turn.reader_id,
            &turn.round1_votes,
            &ids,
            turn.stake,
            &self.config,
        );
        for p in &mut self.players {
            let delta = outcome.deltas.get(&p.player_id).copied().unwrap_or(0);
            p.points = add_signed(p.points, delta);
        }
        let turn = self.turn.as_mut().expect("summary has a turn");
        events.push(GameEvent::SummaryRevealed {
            reader: turn.reader_id.clone(),
            assigned_strategy: turn.assigned_strategy,
            stake: turn.stake,
            votes: turn.round1_votes.clone(),
            outcome: outcome.clone(),
        });
        turn.outcome = Some(outcome);
    }

    /// Unanimity goes straight to movement; anything else is discussed.
    fn resolve_summary(&mut self, events: &mut Vec<GameEvent>) {
        debug_assert_eq!(self.phase, Phase::Summary);
        let unanimous = self
            .turn
            .as_ref()
            .and_then(|t| t.outcome.as_ref())
            .is_some_and(|o| o.unanimous);
        if unanimous {
            self.open_movement(events);
        } else {
            self.set_phase(Phase::Discussion, events);
            events.push(GameEvent::DiscussionStarted);
            self.maybe_finish_discussion(events);
        }
    }

    pub fn mark_ready(&mut self, player: &PlayerId) -> GameResult<Vec<GameEvent>> {
        self.expect_phase(Phase::Discussion)?;
        self.index_of(player)?;
        let turn = self.turn.as_mut().expect("discussion has a turn");
        if !turn.ready.insert(player.clone()) {
            return Err(GameError::AlreadyReady);
        }
        let mut events = vec![GameEvent::ReadyMarked {
            player: player.clone(),
        }];
        self.maybe_finish_discussion(&mut events);
        Ok(events)
    }

    fn maybe_finish_discussion(&mut self, events: &mut Vec<GameEvent>) {
        let turn = self.turn.as_ref().expect("discussion has a turn");
        let all_ready = self
            .players
            .iter()
            .filter(|p| p.connected)
            .all(|p| turn.ready.contains(&p.player_id));
        if all_ready {
            self.resolve_discussion(events);
        }
    }

    fn resolve_discussion(&mut self, events: &mut Vec<GameEvent>) {
        debug_assert_eq!(self.phase, Phase::Discussion);
        self.turn.as_mut().expect("discussion has a turn").round2_votes = Some(Votes::new());
        self.set_phase(Phase::Revote, events);
        events.push(GameEvent::RevoteStarted);
        self.maybe_close_vote(events);
    }

    /// Round-1 voters who did not re-vote keep their first vote.
    fn close_round2(&mut self, events: &mut Vec<GameEvent>) {
        let turn = self.turn.as_mut().expect("revote has a turn");
        let mut round2 = turn.round2_votes.take().unwrap_or_default();
        for (voter, first) in &turn.round1_votes {
            round2.entry(voter.clone()).or_insert(*first);
        }
        turn.round2_votes = Some(round2);
        self.set_phase(Phase::FinalSummary, events);
        self.resolve_final_summary(events);
    }

    /// Persuasion points only; the round-1 stake award stands.
    fn resolve_final_summary(&mut self, events: &mut Vec<GameEvent>) {
        debug_assert_eq!(self.phase, Phase::FinalSummary);
        let turn = self.turn.as_ref().expect("final summary has a turn");
        let round2 = turn.round2_votes.clone().unwrap_or_default();
        let persuasion = scoring::persuasion_awards(
            &turn.round1_votes,
            &round2,
            Some((&turn.reader_id, turn.assigned_strategy)),
            self.config.persuasion_points,
        )
        .expect("round 2 is filled from round 1");
        for p in &mut self.players {
            if let Some(award) = persuasion.get(&p.player_id) {
                p.points = p.points.saturating_add(*award);
            }
        }
        events.push(GameEvent::FinalSummaryRevealed {
            votes: round2,
            persuasion: persuasion.clone(),
        });
        self.turn.as_mut().expect("final summary has a turn").persuasion = Some(persuasion);
        self.open_movement(events);
    }

    // ---- movement ----

    fn open_movement(&mut self, events: &mut Vec<GameEvent>) {
        self.set_phase(Phase::Movement, events);
        events.push(GameEvent::MovementWindow {
            mover: self.reader().player_id.clone(),
        });
    }

    pub fn play_power_card(
        &mut self,
        player: &PlayerId,
        kind: PowerCardKind,
        target: Option<&PlayerId>,
    ) -> GameResult<Vec<GameEvent>> {
        self.expect_phase(Phase::Movement)?;
        self.index_of(player)?;
        if player != &self.reader().player_id {
            return Err(GameError::NotCurrentPlayer);
        }
        let mover = self.reader_index;
        let slot = self.players[mover]
            .hand
            .iter()
            .position(|c| *c == kind)
            .ok_or(GameError::CardNotHeld)?;
        let cost = self.config.card_cost(kind);
        if self.players[mover].points < cost {
            return Err(GameError::InsufficientPoints {
                need: cost,
                have: self.players[mover].points,
            });
        }
        let target_index = match (kind, target) {
            (PowerCardKind::FreezePlayer, Some(t)) => {
                let i = self
                    .players
                    .iter()
                    .position(|p| &p.player_id == t)
                    .ok_or(GameError::InvalidTarget)?;
                if i == mover || self.players[i].frozen {
                    return Err(GameError::InvalidTarget);
                }
                Some(i)
            }
            (PowerCardKind::FreezePlayer, None) | (_, Some(_)) => {
                return Err(GameError::InvalidTarget)
            }
            (_, None) => None,
        };
        if kind == PowerCardKind::ExtraTurn && self.extra_turn_pending {
            return Err(GameError::ExtraTurnPending);
        }

        self.players[mover].points -= cost;
        self.players[mover].hand.remove(slot);
        self.power_deck.discard(kind);
        match kind {
            PowerCardKind::ExtraTurn => self.extra_turn_pending = true,
            PowerCardKind::FreezePlayer => {
                self.players[target_index.expect("checked above")].frozen = true
            }
            PowerCardKind::ExtraDraw => self.draw_power_card(mover),
        }
        Ok(vec![GameEvent::PowerCardPlayed {
            player: player.clone(),
            kind,
            target: target.cloned(),
        }])
    }

    /// The mover closes the power-card window and rolls.
    pub fn roll(&mut self, player: &PlayerId) -> GameResult<Vec<GameEvent>> {
        self.expect_phase(Phase::Movement)?;
        self.index_of(player)?;
        if player != &self.reader().player_id {
            return Err(GameError::NotCurrentPlayer);
        }
        let mut events = Vec::new();
        self.roll_and_move(&mut events);
        Ok(events)
    }

    fn roll_and_move(&mut self, events: &mut Vec<GameEvent>) {
        debug_assert_eq!(self.phase, Phase::Movement);
        let mover = self.reader_index;
        let roll = self.rng.roll(self.config.die_sides);
        let board = self.config.board_length;
        let p = &mut self.players[mover];
        p.token_position = (p.token_position + roll).min(board);
        let mut event_card = None;
        if p.token_position < board {
            let card = self
                .event_deck
                .draw(&mut self.rng)
                .expect("event cards always return to the discard pile");
            self.apply_event_card(card);
            event_card = Some(card);
        }
        events.push(GameEvent::MovementResolved {
            mover: self.players[mover].player_id.clone(),
            roll,
            event_card,
            positions: self.positions(),
        });
        if self.players[mover].token_position >= board {
            self.finish(mover, events);
        } else {
            self.end_turn(events);
        }
    }

    /// Applies a drawn event card for the mover and discards it.
    fn apply_event_card(&mut self, card: EventCard) {
        let mover = self.reader_index;
        let board = self.config.board_length;
        match card {
            EventCard::MoveForward(n) => {
                let p = &mut self.players[mover];
                p.token_position = (p.token_position + u32::from(n)).min(board);
            }
            EventCard::MoveBackward(n) => {
                let p = &mut self.players[mover];
                p.token_position = p.token_position.saturating_sub(u32::from(n));
            }
            EventCard::DrawPowerCard => self.draw_power_card(mover),
        }
        self.event_deck.discard(card);
    }

    /// A card beyond the hand limit goes straight to the discard pile.
    fn draw_power_card(&mut self, player: usize) {
        if let Some(card) = self.power_deck.draw(&mut self.rng) {
            if self.players[player].hand.len() < self.config.hand_limit {
                self.players[player].hand.push(card);
            } else {
                self.power_deck.discard(card);
            }
        }
    }

    fn finish(&mut self, winner: usize, events: &mut Vec<GameEvent>) {
        self.turns_completed += 1;
        let id = self.players[winner].player_id.clone();
        self.winner = Some(id.clone());
        self.set_phase(Phase::Finished, events);
        events.push(GameEvent::GameOver { winner: id });
    }

    fn end_turn(&mut self, events: &mut Vec<GameEvent>) {
        debug_assert_eq!(self.phase, Phase::Movement);
        self.turns_completed += 1;
        self.pass_reader_tag(events);
        self.set_phase(Phase::Reading, events);
        self.begin_reading(events);
    }

    /// Keeps the tag on an extra turn; otherwise moves it to the next
    /// player, skipping (and thawing) frozen ones.
    fn pass_reader_tag(&mut self, events: &mut Vec<GameEvent>) {
        if self.extra_turn_pending {
            self.extra_turn_pending = false;
            return;
        }
        let n = self.players.len();
        let mut next = (self.reader_index + 1) % n;
        while self.players[next].frozen {
            self.players[next].frozen = false;
            events.push(GameEvent::FrozenSkipped {
                player: self.players[next].player_id.clone(),
            });
            next = (next + 1) % n;
        }
        self.reader_index = next;
    }

    fn begin_reading(&mut self, events: &mut Vec<GameEvent>) {
        debug_assert_eq!(self.phase, Phase::Reading);
        let n_targets = self.pack.targets.len();
        let index = if self.target_cursor >= n_targets {
            0
        } else {
            self.target_cursor
        };
        self.target_cursor = index + 1;
        let assigned = if self.config.random_strategy_assignment {
            Strategy::ALL[self.rng.below(5) as usize]
        } else {
            self.pack.targets[index].strategy
        };
        let stake = self.config.points_for(assigned);
        let reader = self.reader().player_id.clone();
        self.turn = Some(TurnRecord {
            reader_id: reader.clone(),
            target_index: index,
            assigned_strategy: assigned,
            stake,
            stake_altered: false,
            strategy_swapped: false,
            self_explanation: None,
            round1_votes: Votes::new(),
            round2_votes: None,
            outcome: None,
            persuasion: None,
            ready: BTreeSet::new(),
        });
        events.push(GameEvent::TurnAssigned {
            reader,
            target_index: index,
            assigned_strategy: assigned,
            stake,
        });
    }

    // ---- presence, timers, rematch ----

    pub fn set_connected(
        &mut self,
        player: &PlayerId,
        connected: bool,
    ) -> GameResult<Vec<GameEvent>> {
        let i = self.index_of(player)?;
        if self.players[i].connected == connected {
            return Ok(Vec::new());
        }
        self.players[i].connected = connected;
        let mut events = vec![GameEvent::PresenceChanged {
            player: player.clone(),
            connected,
        }];
        if !connected {
            match self.phase {
                Phase::Identification | Phase::Revote => self.maybe_close_vote(&mut events),
                Phase::Discussion => self.maybe_finish_discussion(&mut events),
                _ => {}
            }
        }
        Ok(events)
    }

    pub fn fire_timer(&mut self, timer: TimerEvent) -> GameResult<Vec<GameEvent>> {
        let mut events = Vec::new();
        match timer {
            TimerEvent::VoteTimeout { round: 1 } => {
                self.expect_phase(Phase::Identification)?;
                self.close_round1(&mut events);
            }
            TimerEvent::VoteTimeout { .. } => {
                self.expect_phase(Phase::Revote)?;
                self.close_round2(&mut events);
            }
            TimerEvent::DiscussionTimeout => {
                self.expect_phase(Phase::Discussion)?;
                self.resolve_discussion(&mut events);
            }
            TimerEvent::PowerCardWindowTimeout => {
                self.expect_phase(Phase::Movement)?;
                self.roll_and_move(&mut events);
            }
            TimerEvent::ReaderTimeout => {
                self.expect_phase(Phase::Reading)?;
                if self.reader().connected {
                    return Err(GameError::ReaderConnected);
                }
                self.void_turn(&mut events);
            }
        }
        Ok(events)
    }

    /// Abandons the current reading turn without awards.
    fn void_turn(&mut self, events: &mut Vec<GameEvent>) {
        events.push(GameEvent::TurnVoided {
            reader: self.reader().player_id.clone(),
        });
        self.turns_completed += 1;
        self.extra_turn_pending = false;
        self.pass_reader_tag(events);
        self.begin_reading(events);
    }

    /// Fresh game for the same roster, pack and config.
    pub fn rematch(&mut self, seed: u64) -> GameResult<Vec<GameEvent>> {
        self.expect_phase(Phase::Finished)?;
        let roster: Vec<(PlayerId, String)> = self
            .players
            .iter()
            .map(|p| (p.player_id.clone(), p.display_name.clone()))
            .collect();
        let connected: Vec<bool> = self.players.iter().map(|p| p.connected).collect();
        let mut fresh = GameState::new(self.config.clone(), self.pack.clone(), &roster, seed)?;
        for (p, c) in fresh.players.iter_mut().zip(connected) {
            p.connected = c;
        }
        let mut events = vec![
            GameEvent::PhaseChanged {
                from: Phase::Finished,
                to: Phase::Lobby,
            },
            GameEvent::GameReset,
            GameEvent::PhaseChanged {
                from: Phase::Lobby,
                to: Phase::Reading,
            },
        ];
        let turn = fresh.turn.as_ref().expect("new game assigns a turn");
        events.push(GameEvent::TurnAssigned {
            reader: turn.reader_id.clone(),
            target_index: turn.target_index,
            assigned_strategy: turn.assigned_strategy,
            stake: turn.stake,
        });
        *self = fresh;
        Ok(events)
    }

    // ---- helpers ----

    fn set_phase(&mut self, to: Phase, events: &mut Vec<GameEvent>) {
        debug_assert!(
            self.phase.can_transition_to(to),
            "illegal transition {:?} -> {to:?}",
            self.phase
        );
        events.push(GameEvent::PhaseChanged {
            from: self.phase,
            to,
        });
        self.phase = to;
    }

    fn expect_phase(&self, phase: Phase) -> GameResult<()> {
        if self.phase == phase {
            Ok(())
        } else {
            Err(GameError::WrongPhase(self.phase))
        }
    }

    fn expect_reader(&self, player: &PlayerId) -> GameResult<()> {
        self.index_of(player)?;
        if &self.reader().player_id == player {
            Ok(())
        } else {
            Err(GameError::NotReader)
        }
    }

    fn index_of(&self, player: &PlayerId) -> GameResult<usize> {
        self.players
            .iter()
            .position(|p| &p.player_id == player)
            .ok_or_else(|| GameError::UnknownPlayer(player.clone()))
    }

    fn charge(&mut self, player: usize, cost: u32) -> GameResult<()> {
        let have = self.players[player].points;
        if have < cost {
            return Err(GameError::InsufficientPoints { need: cost, have });
        }
        self.players[player].points = have - cost;
        Ok(())
    }
}

fn add_signed(points: u32, delta: i64) -> u32 {
    (i64::from(points) + delta).clamp(0, i64::from(u32::MAX)) as u32
}
