use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, GameConfig};
use crate::content::{PackError, TextPack};
use crate::game::{Action, GameError, GameEvent, GameState, Phase, PlayerId, TimerEvent};
use crate::protocol::PROTOCOL_VERSION;
use crate::rng::{derive_seed, GameRng};
use crate::server::log::{command_action, LogEntry, LogHeader, LogInput, RosterEntry, SessionLog};

use super::{bot_act, BotPolicy, Observation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    InvalidConfig(#[from] ConfigError),
    #[error(transparent)]
    InvalidPack(#[from] PackError),
    #[error("{got} seats outside {min}..={max}")]
    Seats { got: usize, min: usize, max: usize },
    #[error("need at least one game")]
    NoGames,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOptions {
    /// Defaults to 10 × board_length.
    pub turn_cap: Option<u64>,
    pub parallel: bool,
    /// Keep every game's full log text in the outcome.
    pub keep_logs: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            turn_cap: None,
            parallel: true,
            keep_logs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub games: usize,
    pub seed: u64,
    pub policies: Vec<String>,
    pub turn_cap: u64,
    pub capped_games: usize,
    pub mean_turns: f64,
    pub p50_turns: u64,
    pub p95_turns: u64,
    pub scored_turns: u64,
    pub unanimity_rate: f64,
    pub majority_rate: f64,
    pub discussion_rate: f64,
    pub rejected_commands: u64,
    pub mean_final_points: Vec<f64>,
    pub winner_distribution: Vec<f64>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// One CSV row per game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRow {
    pub game: usize,
    pub seed: u64,
    pub turns: u64,
    pub capped: bool,
    pub winner_seat: Option<usize>,
    pub scored_turns: u64,
    pub unanimous_turns: u64,
    pub majority_turns: u64,
    pub discussion_turns: u64,
    pub rejected_commands: u64,
    /// Seat points joined with `;`.
    pub final_points: String,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub report: SimReport,
    pub rows: Vec<GameRow>,
    /// SHA-256 of each game's log text.
    pub log_digests: Vec<String>,
    /// Full log texts when `keep_logs` was set.
    pub logs: Vec<String>,
}

impl SimOutcome {
    pub fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("rows serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
    }
}

struct Played {
    row: GameRow,
    points: Vec<u32>,
    log_digest: String,
    log: Option<String>,
}

pub fn seat_id(seat: usize) -> PlayerId {
    PlayerId(format!("p{}", seat + 1))
}

fn timer_for(state: &GameState) -> Option<TimerEvent> {
    match state.phase {
        Phase::Identification => Some(TimerEvent::VoteTimeout { round: 1 }),
        Phase::Revote => Some(TimerEvent::VoteTimeout { round: 2 }),
        Phase::Discussion => Some(TimerEvent::DiscussionTimeout),
        Phase::Movement => Some(TimerEvent::PowerCardWindowTimeout),
        _ => None,
    }
}

fn play_one(
    config: &GameConfig,
    policies: &[BotPolicy],
    pack: &Arc<TextPack>,
    game: usize,
    seed: u64,
    cap: u64,
    keep_log: bool,
) -> Result<Played, GameError> {
    let roster: Vec<(PlayerId, String)> = (0..policies.len())
        .map(|s| (seat_id(s), format!("bot{}", s + 1)))
        .collect();
    let mut state = GameState::new(config.clone(), pack.clone(), &roster, seed)?;
    let mut log = SessionLog::new(LogHeader {
        protocol: PROTOCOL_VERSION.to_string(),
        lobby_id: format!("sim-{game}"),
        config: config.clone(),
        pack: (**pack).clone(),
        pack_digest: pack.digest(),
        seed,
        roster: roster
            .iter()
            .map(|(player_id, name)| RosterEntry {
                player_id: player_id.clone(),
                name: name.clone(),
            })
            .collect(),
    });
    let mut rngs: Vec<GameRng> = (0..policies.len())
        .map(|s| GameRng::from_seed(derive_seed(seed, s as u64)))
        .collect();
    let mut row = GameRow {
        game,
        seed,
        turns: 0,
        capped: false,
        winner_seat: None,
        scored_turns: 0,
        unanimous_turns: 0,
        majority_turns: 0,
        discussion_turns: 0,
        rejected_commands: 0,
        final_points: String::new(),
    };
    let mut clock = 0u64;

    while state.phase != Phase::Finished {
        if state.turns_completed >= cap {
            row.capped = true;
            break;
        }
        clock += 1;
        let mut next = None;
        for (seat, policy) in policies.iter().enumerate() {
            let me = seat_id(seat);
            let obs = Observation::from_state(&state, &me, policy.is_oracle());
            if let Some(command) = bot_act(policy, &obs, &mut rngs[seat]) {
                next = Some((me, command));
                break;
            }
        }
        let (actor, input, action) = match next {
            Some((me, command)) => {
                let action = command_action(&me, &command);
                (Some(me), LogInput::Command { command }, action)
            }
            None => {
                let timer = timer_for(&state).expect("bots stalled outside a timed phase");
                (None, LogInput::Timer { timer }, Some(Action::Timer(timer)))
            }
        };
        log.append(LogEntry {
            at: clock,
            actor,
            input,
        });
        let Some(action) = action else { continue };
        match state.apply(&action) {
            Ok(events) => {
                for e in &events {
                    match e {
                        GameEvent::SummaryRevealed { outcome, .. } => {
                            row.scored_turns += 1;
                            row.unanimous_turns += outcome.unanimous as u64;
                            row.majority_turns += outcome.majority_strategy.is_some() as u64;
                        }
                        GameEvent::DiscussionStarted => row.discussion_turns += 1,
                        _ => {}
                    }
                }
            }
            Err(_) => row.rejected_commands += 1,
        }
    }
    log.checkpoint(&state);

    row.turns = state.turns_completed;
    row.winner_seat = state
        .winner
        .as_ref()
        .and_then(|w| state.players.iter().position(|p| &p.player_id == w));
    let points: Vec<u32> = state.players.iter().map(|p| p.points).collect();
    row.final_points = points
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(";");
    let text = log.text();
    Ok(Played {
        row,
        points,
        log_digest: hex::encode(Sha256::digest(text.as_bytes())),
        log: keep_log.then_some(text),
    })
}

/// Nearest-rank percentile of sorted values.
fn percentile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Plays `n_games` complete games of bots against the rules engine. Game
/// `i` uses seed `derive_seed(seed, i)`.
pub fn simulate(
    config: &GameConfig,
    policies: &[BotPolicy],
    pack: &TextPack,
    n_games: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<SimOutcome, SimError> {
    config.validate()?;
    pack.validate()?;
    if n_games == 0 {
        return Err(SimError::NoGames);
    }
    if !(config.min_players..=config.max_players).contains(&policies.len()) {
        return Err(SimError::Seats {
            got: policies.len(),
            min: config.min_players,
            max: config.max_players,
        });
    }
    let cap = opts.turn_cap.unwrap_or(10 * config.board_length as u64);
    let pack = Arc::new(pack.clone());
    let run = |i: usize| {
        play_one(config, policies, &pack, i, derive_seed(seed, i as u64), cap, opts.keep_logs)
            .expect("validated inputs start a game")
    };
    let played: Vec<Played> = if opts.parallel {
        (0..n_games).into_par_iter().map(run).collect()
    } else {
        (0..n_games).map(run).collect()
    };

    let seats = policies.len();
    let mut turns: Vec<u64> = played.iter().map(|p| p.row.turns).collect();
    turns.sort_unstable();
    let sum = |f: fn(&GameRow) -> u64| played.iter().map(|p| f(&p.row)).sum::<u64>();
    let scored = sum(|r| r.scored_turns);
    let finished = played.iter().filter(|p| !p.row.capped).count();
    let mut wins = vec![0u64; seats];
    let mut points = vec![0u64; seats];
    for p in &played {
        if let Some(w) = p.row.winner_seat {
            wins[w] += 1;
        }
        for (acc, pts) in points.iter_mut().zip(&p.points) {
            *acc += *pts as u64;
        }
    }
    let report = SimReport {
        games: n_games,
        seed,
        policies: policies.iter().map(ToString::to_string).collect(),
        turn_cap: cap,
        capped_games: n_games - finished,
        mean_turns: ratio(turns.iter().sum(), n_games as u64),
        p50_turns: percentile(&turns, 0.5),
        p95_turns: percentile(&turns, 0.95),
        scored_turns: scored,
        unanimity_rate: ratio(sum(|r| r.unanimous_turns), scored),
        majority_rate: ratio(sum(|r| r.majority_turns), scored),
        discussion_rate: ratio(sum(|r| r.discussion_turns), scored),
        rejected_commands: sum(|r| r.rejected_commands),
        mean_final_points: points.iter().map(|&p| ratio(p, n_games as u64)).collect(),
        winner_distribution: wins.iter().map(|&w| ratio(w, finished as u64)).collect(),
    };
    let mut rows = Vec::with_capacity(played.len());
    let mut log_digests = Vec::with_capacity(played.len());
    let mut logs = Vec::new();
    for p in played {
        rows.push(p.row);
        log_digests.push(p.log_digest);
        logs.extend(p.log);
    }
    Ok(SimOutcome {
        report,
        rows,
        log_digests,
        logs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content::sample_pack;
    use crate::server::log::replay;

    #[test]
    fn small_run_is_deterministic_and_replayable() {
        let cfg = GameConfig::default();
        let policies = [BotPolicy::UNIFORM.greedy(); 3];
        let opts = SimOptions { keep_logs: true, ..SimOptions::default() };
        let a = simulate(&cfg, &policies, &sample_pack(), 8, 42, &opts).unwrap();
        let b = simulate(&cfg, &policies, &sample_pack(), 8, 42, &SimOptions { parallel: false, ..opts }).unwrap();
        assert_eq!(a.report.to_json(), b.report.to_json());
        assert_eq!(a.log_digests, b.log_digests);
        assert_eq!(a.report.capped_games, 0);
        assert_eq!(a.report.rejected_commands, 0);
        for log in &a.logs {
            replay(log).unwrap();
        }
        let total: f64 = a.report.winner_distribution.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn perfect_oracles_never_discuss() {
        let cfg = GameConfig::default();
        let out = simulate(&cfg, &[BotPolicy::oracle(1.0); 4], &sample_pack(), 20, 1, &SimOptions::default()).unwrap();
        assert_eq!(out.report.unanimity_rate, 1.0);
        assert_eq!(out.report.discussion_rate, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = GameConfig::default();
        let opts = SimOptions::default();
        assert_eq!(
            simulate(&cfg, &[BotPolicy::UNIFORM], &sample_pack(), 1, 0, &opts).unwrap_err(),
            SimError::Seats { got: 1, min: 2, max: 6 }
        );
        assert_eq!(
            simulate(&cfg, &[BotPolicy::UNIFORM; 2], &sample_pack(), 0, 0, &opts).unwrap_err(),
            SimError::NoGames
        );
    }

    #[test]
    fn csv_has_a_row_per_game() {
        let out = simulate(&GameConfig::default(), &[BotPolicy::UNIFORM; 2], &sample_pack(), 3, 5, &SimOptions::default()).unwrap();
        assert_eq!(out.csv().lines().count(), 4);
    }
}
