//! Vote tallying and point awards.
//!
//! The reader never votes explicitly: the assigned strategy counts as the
//! reader's vote. With `n` players in the turn (abstainers included), a
//! strategy holds the majority when it is the only one with at least
//! `ceil(n / 2)` votes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::GameConfig;
use crate::game::PlayerId;
use crate::strategy::Strategy;

pub type Votes = BTreeMap<PlayerId, Strategy>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteOutcome {
    pub majority_strategy: Option<Strategy>,
    pub reader_in_majority: bool,
    pub unanimous: bool,
    pub deltas: BTreeMap<PlayerId, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoringError {
    #[error("round-1 and round-2 ballots cover different voters")]
    VoterSetMismatch,
}

pub fn majority_threshold(n_players: usize) -> usize {
    n_players.div_ceil(2)
}

/// Counts per strategy, in [`Strategy::ALL`] order, including the implicit
/// reader vote.
pub fn vote_counts(guesser_votes: &Votes, assigned: Strategy) -> [usize; 5] {
    let mut counts = [0usize; 5];
    counts[assigned.index()] += 1;
    for s in guesser_votes.values() {
        counts[s.index()] += 1;
    }
    counts
}

/// Round-1 tally. The returned outcome has no deltas yet.
pub fn tally_votes(guesser_votes: &Votes, assigned: Strategy, n_players: usize) -> VoteOutcome {
    debug_assert!(n_players >= 2);
    debug_assert!(guesser_votes.len() < n_players);
    let counts = vote_counts(guesser_votes, assigned);
    let threshold = majority_threshold(n_players);
    let mut reaching = Strategy::ALL
        .into_iter()
        .filter(|s| counts[s.index()] >= threshold);
    let majority_strategy = match (reaching.next(), reaching.next()) {
        (Some(s), None) => Some(s),
        _ => None,
    };
    let unanimous = guesser_votes.len() + 1 == n_players
        && guesser_votes.values().all(|s| *s == assigned);
    VoteOutcome {
        majority_strategy,
        reader_in_majority: majority_strategy == Some(assigned),
        unanimous,
        deltas: BTreeMap::new(),
    }
}

/// Stake and agreement-bonus deltas for a round-1 outcome.
///
/// `players` is every player in the game; each appears in the result, with
/// zero when nothing is earned. A unanimous vote pays the agreement bonus to
/// all of them.
pub fn stake_deltas(
    outcome: &VoteOutcome,
    reader: &PlayerId,
    guesser_votes: &Votes,
    players: &[PlayerId],
    stake: u32,
    config: &GameConfig,
) -> BTreeMap<PlayerId, i64> {
    let mut deltas: BTreeMap<PlayerId, i64> = players.iter().map(|p| (p.clone(), 0)).collect();
    let Some(majority) = outcome.majority_strategy else {
        return deltas;
    };
    let guesser_share = if outcome.reader_in_majority {
        *deltas.entry(reader.clone()).or_default() += i64::from(stake);
        stake / 2
    } else {
        stake / config.minority_guesser_points_divisor
    };
    for (voter, vote) in guesser_votes {
        if *vote == majority {
            *deltas.entry(voter.clone()).or_default() += i64::from(guesser_share);
        }
    }
    if outcome.unanimous {
        for d in deltas.values_mut() {
            *d += i64::from(config.agreement_bonus);
        }
    }
    deltas
}

/// Points for changing minds between rounds.
///
/// For each guesser whose round-2 vote differs from round 1, every player
/// whose round-1 vote (the reader's implicit vote included) equals the new
/// vote earns `per_convert`.
pub fn persuasion_awards(
    round1: &Votes,
    round2: &Votes,
    reader: Option<(&PlayerId, Strategy)>,
    per_convert: u32,
) -> Result<BTreeMap<PlayerId, u32>, ScoringError> {
    if round1.len() != round2.len() || round1.keys().any(|k| !round2.contains_key(k)) {
        return Err(ScoringError::VoterSetMismatch);
    }
    let mut holders: Vec<(&PlayerId, Strategy)> = round1.iter().map(|(p, s)| (p, *s)).collect();
    let mut awards: BTreeMap<PlayerId, u32> = round1.keys().map(|p| (p.clone(), 0)).collect();
    if let Some((id, assigned)) = reader {
        holders.push((id, assigned));
        awards.insert(id.clone(), 0);
    }
    for (voter, first) in round1 {
        let second = round2[voter];
        if second == *first {
            continue;
        }
        for (holder, held) in &holders {
            if *held == second {
                *awards.get_mut(*holder).expect("holder listed") += per_convert;
            }
        }
    }
    Ok(awards)
}
