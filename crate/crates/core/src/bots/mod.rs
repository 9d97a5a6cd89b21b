//! Scripted players.
//!
//! A bot sees an [`Observation`] (what a human at that seat would know) and
//! answers with at most one [`ClientCommand`]. The same policy code drives
//! the in-process simulator and bots attached over the wire.

mod sim;
mod wire;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::game::cards::PowerCardKind;
use crate::game::scoring::Votes;
use crate::game::{GameState, Phase, PlayerId};
use crate::protocol::ClientCommand;
use crate::rng::GameRng;
use crate::strategy::Strategy;

pub use sim::{simulate, GameRow, SimError, SimOptions, SimOutcome, SimReport};
pub use wire::{play_hub_game, HubGame, WireBot};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VotePolicy {
    UniformRandom,
    /// Votes the assigned strategy with probability `p_correct`, otherwise
    /// one of the other four. Needs to see the assignment, which only the
    /// simulator grants; elsewhere it degrades to uniform.
    OracleBiased { p_correct: f64 },
    /// Re-votes its round-1 choice.
    Stubborn,
    /// Re-votes the round-1 plurality.
    Swayed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpendPolicy {
    Never,
    /// Plays every affordable card before rolling.
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BotPolicy {
    pub vote: VotePolicy,
    pub spend: SpendPolicy,
}

impl BotPolicy {
    pub const UNIFORM: BotPolicy = BotPolicy {
        vote: VotePolicy::UniformRandom,
        spend: SpendPolicy::Never,
    };

    pub fn oracle(p_correct: f64) -> Self {
        BotPolicy {
            vote: VotePolicy::OracleBiased { p_correct },
            spend: SpendPolicy::Never,
        }
    }

    pub fn greedy(self) -> Self {
        BotPolicy {
            spend: SpendPolicy::Greedy,
            ..self
        }
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self.vote, VotePolicy::OracleBiased { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad policy `{0}` (expected uniform, oracle:P, stubborn or swayed, optionally +greedy)")]
pub struct PolicyParseError(pub String);

/// `uniform`, `oracle:0.8`, `stubborn`, `swayed`, each optionally followed
/// by `+greedy`.
impl FromStr for BotPolicy {
    type Err = PolicyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PolicyParseError(s.to_string());
        let (vote, spend) = match s.split_once('+') {
            Some((v, "greedy")) => (v, SpendPolicy::Greedy),
            Some(_) => return Err(err()),
            None => (s, SpendPolicy::Never),
        };
        let vote = match vote.split_once(':') {
            Some(("oracle", p)) => {
                let p_correct: f64 = p.parse().map_err(|_| err())?;
                if !(0.0..=1.0).contains(&p_correct) {
                    return Err(err());
                }
                VotePolicy::OracleBiased { p_correct }
            }
            Some(_) => return Err(err()),
            None => match vote {
                "uniform" => VotePolicy::UniformRandom,
                "oracle" => VotePolicy::OracleBiased { p_correct: 1.0 },
                "stubborn" => VotePolicy::Stubborn,
                "swayed" => VotePolicy::Swayed,
                _ => return Err(err()),
            },
        };
        Ok(BotPolicy { vote, spend })
    }
}

impl fmt::Display for BotPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.vote {
            VotePolicy::UniformRandom => f.write_str("uniform")?,
            VotePolicy::OracleBiased { p_correct } => write!(f, "oracle:{p_correct}")?,
            VotePolicy::Stubborn => f.write_str("stubborn")?,
            VotePolicy::Swayed => f.write_str("swayed")?,
        }
        if self.spend == SpendPolicy::Greedy {
            f.write_str("+greedy")?;
        }
        Ok(())
    }
}

/// Canned self-explanation for a strategy. None of them name a strategy.
pub fn se_template(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::ComprehensionMonitoring => "I am not sure I follow this part yet, I should reread it.",
        Strategy::Paraphrasing => "So basically this says the same thing in plainer words.",
        Strategy::Prediction => "I think the next part will explain what happens after this.",
        Strategy::Elaboration => "This reminds me of something I already know from everyday life.",
        Strategy::Bridging => "This connects back to what the earlier sentence said.",
    }
}

/// What one seat knows when it decides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observation {
    pub me: PlayerId,
    pub phase: Option<Phase>,
    pub reader_id: Option<PlayerId>,
    /// Known to the reader, and to oracles inside the simulator.
    pub assigned_strategy: Option<Strategy>,
    pub se_posted: bool,
    pub my_round1_vote: Option<Strategy>,
    pub my_round2_vote: Option<Strategy>,
    /// Guesser round-1 votes, once the summary has revealed them.
    pub round1_votes: Votes,
    pub ready: bool,
    pub points: u32,
    pub hand: Vec<PowerCardKind>,
    pub card_costs: BTreeMap<PowerCardKind, u32>,
    /// Other players that may still be frozen.
    pub freeze_targets: Vec<PlayerId>,
    pub extra_turn_pending: bool,
}

impl Observation {
    /// The view of seat `me`. `oracle` additionally reveals the assignment.
    pub fn from_state(state: &GameState, me: &PlayerId, oracle: bool) -> Self {
        let reader = &state.reader().player_id;
        let mine = state.player(me);
        let turn = state.turn.as_ref();
        let revealed = matches!(state.phase, Phase::Discussion | Phase::Revote);
        Observation {
            me: me.clone(),
            phase: Some(state.phase),
            reader_id: Some(reader.clone()),
            assigned_strategy: turn
                .filter(|_| oracle || me == reader)
                .map(|t| t.assigned_strategy),
            se_posted: turn.is_some_and(|t| t.self_explanation.is_some()),
            my_round1_vote: turn.and_then(|t| t.round1_votes.get(me).copied()),
            my_round2_vote: turn
                .and_then(|t| t.round2_votes.as_ref())
                .and_then(|v| v.get(me).copied()),
            round1_votes: match turn {
                Some(t) if revealed => t.round1_votes.clone(),
                _ => Votes::new(),
            },
            ready: turn.is_some_and(|t| t.ready.contains(me)),
            points: mine.map_or(0, |p| p.points),
            hand: mine.map(|p| p.hand.clone()).unwrap_or_default(),
            card_costs: state.config.power_card_costs.clone(),
            freeze_targets: state
                .players
                .iter()
                .filter(|p| &p.player_id != me && !p.frozen)
                .map(|p| p.player_id.clone())
                .collect(),
            extra_turn_pending: state.extra_turn_pending,
        }
    }

    fn is_reader(&self) -> bool {
        self.reader_id.as_ref() == Some(&self.me)
    }
}

fn uniform(rng: &mut GameRng) -> Strategy {
    Strategy::ALL[rng.below(5) as usize]
}

fn plurality(votes: &Votes) -> Option<Strategy> {
    let mut counts = [0usize; 5];
    for s in votes.values() {
        counts[s.index()] += 1;
    }
    let best = *counts.iter().max()?;
    if best == 0 {
        return None;
    }
    Strategy::ALL.into_iter().find(|s| counts[s.index()] == best)
}

fn vote(policy: VotePolicy, obs: &Observation, round: u8, rng: &mut GameRng) -> Strategy {
    match (policy, round) {
        (VotePolicy::OracleBiased { p_correct }, _) => match obs.assigned_strategy {
            Some(assigned) if rng.chance(p_correct) => assigned,
            Some(assigned) => assigned.others()[rng.below(4) as usize],
            None => uniform(rng),
        },
        (VotePolicy::Stubborn, 2) => obs.my_round1_vote.unwrap_or_else(|| uniform(rng)),
        (VotePolicy::Swayed, 2) => plurality(&obs.round1_votes)
            .or(obs.my_round1_vote)
            .unwrap_or_else(|| uniform(rng)),
        _ => uniform(rng),
    }
}

fn spend(obs: &Observation) -> Option<ClientCommand> {
    obs.hand.iter().find_map(|&kind| {
        let cost = obs.card_costs.get(&kind).copied()?;
        if cost > obs.points {
            return None;
        }
        let target = match kind {
            PowerCardKind::FreezePlayer => Some(obs.freeze_targets.first()?.clone()),
            PowerCardKind::ExtraTurn if obs.extra_turn_pending => return None,
            _ => None,
        };
        Some(ClientCommand::PlayPowerCard { kind, target })
    })
}

/// The seat's next move, or `None` to wait.
pub fn bot_act(policy: &BotPolicy, obs: &Observation, rng: &mut GameRng) -> Option<ClientCommand> {
    match obs.phase? {
        Phase::Reading if obs.is_reader() && !obs.se_posted => {
            let text = se_template(obs.assigned_strategy?).to_string();
            Some(ClientCommand::SubmitSE { text })
        }
        Phase::Identification if !obs.is_reader() && obs.my_round1_vote.is_none() => {
            Some(ClientCommand::Vote {
                strategy: vote(policy.vote, obs, 1, rng),
            })
        }
        Phase::Discussion if !obs.ready => Some(ClientCommand::Ready {}),
        Phase::Revote
            if !obs.is_reader() && obs.my_round1_vote.is_some() && obs.my_round2_vote.is_none() =>
        {
            Some(ClientCommand::Vote {
                strategy: vote(policy.vote, obs, 2, rng),
            })
        }
        Phase::Movement if obs.is_reader() => {
            let card = match policy.spend {
                SpendPolicy::Greedy => spend(obs),
                SpendPolicy::Never => None,
            };
            Some(card.unwrap_or(ClientCommand::Roll {}))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::config::GameConfig;
    use crate::content::sample_pack;

    fn game() -> GameState {
        let roster: Vec<(PlayerId, String)> =
            (0..4).map(|i| (PlayerId(format!("p{i}")), format!("P{i}"))).collect();
        GameState::new(GameConfig::default(), Arc::new(sample_pack()), &roster, 9).unwrap()
    }

    #[test]
    fn parse_round_trips() {
        for s in ["uniform", "oracle:0.75", "stubborn", "swayed+greedy", "oracle:1+greedy"] {
            let p: BotPolicy = s.parse().unwrap();
            assert_eq!(p.to_string().parse::<BotPolicy>().unwrap(), p);
        }
        assert!("oracle:1.5".parse::<BotPolicy>().is_err());
        assert!("lazy".parse::<BotPolicy>().is_err());
        assert!("uniform+thrifty".parse::<BotPolicy>().is_err());
    }

    #[test]
    fn templates_do_not_name_strategies() {
        for s in Strategy::ALL {
            let t = se_template(s).to_lowercase();
            for name in Strategy::ALL {
                assert!(!t.contains(&name.name().replace('_', " ")));
                assert!(!t.contains(name.name()));
            }
        }
    }

    #[test]
    fn reader_submits_template_for_assignment() {
        let g = game();
        let obs = Observation::from_state(&g, &"p0".into(), false);
        let mut rng = GameRng::from_seed(1);
        let assigned = g.turn.as_ref().unwrap().assigned_strategy;
        assert_eq!(
            bot_act(&BotPolicy::UNIFORM, &obs, &mut rng),
            Some(ClientCommand::SubmitSE { text: se_template(assigned).into() })
        );
        let guesser = Observation::from_state(&g, &"p1".into(), false);
        assert_eq!(guesser.assigned_strategy, None);
        assert_eq!(bot_act(&BotPolicy::UNIFORM, &guesser, &mut rng), None);
    }

    #[test]
    fn perfect_oracle_always_votes_assignment() {
        let mut g = game();
        g.submit_self_explanation(&"p0".into(), "Hm.").unwrap();
        let assigned = g.turn.as_ref().unwrap().assigned_strategy;
        let obs = Observation::from_state(&g, &"p2".into(), true);
        let mut rng = GameRng::from_seed(2);
        for _ in 0..200 {
            assert_eq!(
                bot_act(&BotPolicy::oracle(1.0), &obs, &mut rng),
                Some(ClientCommand::Vote { strategy: assigned })
            );
        }
    }

    #[test]
    fn uniform_votes_cover_all_strategies() {
        let mut g = game();
        g.submit_self_explanation(&"p0".into(), "Hm.").unwrap();
        let obs = Observation::from_state(&g, &"p1".into(), false);
        let mut rng = GameRng::from_seed(3);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..200 {
            if let Some(ClientCommand::Vote { strategy }) = bot_act(&BotPolicy::UNIFORM, &obs, &mut rng) {
                seen.insert(strategy);
            }
        }
        assert_eq!(seen.len(), 5);
    }

    #[test]
    fn revote_policies() {
        let mut obs = Observation {
            me: "p1".into(),
            phase: Some(Phase::Revote),
            reader_id: Some("p0".into()),
            my_round1_vote: Some(Strategy::Prediction),
            round1_votes: Votes::from([
                ("p1".into(), Strategy::Prediction),
                ("p2".into(), Strategy::Bridging),
                ("p3".into(), Strategy::Bridging),
            ]),
            ..Observation::default()
        };
        let mut rng = GameRng::from_seed(4);
        let stubborn = BotPolicy { vote: VotePolicy::Stubborn, spend: SpendPolicy::Never };
        let swayed = BotPolicy { vote: VotePolicy::Swayed, spend: SpendPolicy::Never };
        assert_eq!(bot_act(&stubborn, &obs, &mut rng), Some(ClientCommand::Vote { strategy: Strategy::Prediction }));
        assert_eq!(bot_act(&swayed, &obs, &mut rng), Some(ClientCommand::Vote { strategy: Strategy::Bridging }));
        obs.my_round2_vote = Some(Strategy::Bridging);
        assert_eq!(bot_act(&swayed, &obs, &mut rng), None);
    }

    #[test]
    fn greedy_mover_plays_then_rolls() {
        let mut obs = Observation {
            me: "p0".into(),
            phase: Some(Phase::Movement),
            reader_id: Some("p0".into()),
            points: 5,
            hand: vec![PowerCardKind::ExtraTurn, PowerCardKind::FreezePlayer],
            card_costs: GameConfig::default().power_card_costs,
            freeze_targets: vec!["p2".into()],
            ..Observation::default()
        };
        let mut rng = GameRng::from_seed(5);
        let greedy = BotPolicy::UNIFORM.greedy();
        assert_eq!(
            bot_act(&greedy, &obs, &mut rng),
            Some(ClientCommand::PlayPowerCard {
                kind: PowerCardKind::FreezePlayer,
                target: Some("p2".into())
            })
        );
        assert_eq!(bot_act(&BotPolicy::UNIFORM, &obs, &mut rng), Some(ClientCommand::Roll {}));
        obs.points = 0;
        assert_eq!(bot_act(&greedy, &obs, &mut rng), Some(ClientCommand::Roll {}));
    }
}
