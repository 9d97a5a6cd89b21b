use crate::game::{GameState, PlayerId};

use super::ServerEvent;

/// The copy of `event` that `recipient` may see.
///
/// Until the summary reveals it, the assigned strategy (and the stake, which
/// would give it away through the point table) goes only to the reader.
/// Other players' power-card hands are hidden in standings.
pub fn redact_for(recipient: &PlayerId, event: &ServerEvent, state: &GameState) -> ServerEvent {
    let is_reader = |reader_id: &PlayerId| {
        let current = state.turn.as_ref().map(|t| &t.reader_id).unwrap_or(reader_id);
        recipient == reader_id && recipient == current
    };
    let mut out = event.clone();
    match &mut out {
        ServerEvent::TurnAssigned {
            reader_id,
            target_view,
            stake,
        } if !is_reader(reader_id) => {
            target_view.assigned_strategy = None;
            *stake = None;
        }
        ServerEvent::StakeAltered { reader_id, stake } if !is_reader(reader_id) => {
            *stake = None;
        }
        ServerEvent::StrategySwapped {
            reader_id,
            strategy,
            stake,
        } if !is_reader(reader_id) => {
            *strategy = None;
            *stake = None;
        }
        ServerEvent::Standings { players } => {
            for p in players.iter_mut().filter(|p| &p.player_id != recipient) {
                p.hand = None;
            }
        }
        ServerEvent::GameStarted { snapshot } => {
            for p in snapshot.players.iter_mut().filter(|p| &p.player_id != recipient) {
                p.hand = None;
            }
        }
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::Arc;

    use super::*;
    use crate::config::GameConfig;
    use crate::content::sample_pack;
    use crate::protocol::OutcomeSummary;
    use crate::strategy::Strategy;

    fn state() -> GameState {
        let roster: Vec<(PlayerId, String)> =
            (0..3).map(|i| (PlayerId(format!("p{i}")), format!("P{i}"))).collect();
        GameState::new(GameConfig::default(), Arc::new(sample_pack()), &roster, 5).unwrap()
    }

    fn turn_assigned(state: &GameState) -> ServerEvent {
        ServerEvent::TurnAssigned {
            reader_id: state.reader().player_id.clone(),
            target_view: state.target_view().unwrap(),
            stake: Some(state.turn.as_ref().unwrap().stake),
        }
    }

    #[test]
    fn reader_sees_strategy() {
        let s = state();
        let ev = redact_for(&"p0".into(), &turn_assigned(&s), &s);
        let ServerEvent::TurnAssigned { target_view, stake, .. } = ev else { panic!() };
        assert_eq!(target_view.assigned_strategy, Some(Strategy::Paraphrasing));
        assert_eq!(stake, Some(4));
    }

    #[test]
    fn guesser_does_not() {
        let s = state();
        let ev = redact_for(&"p1".into(), &turn_assigned(&s), &s);
        let ServerEvent::TurnAssigned { target_view, stake, .. } = ev else { panic!() };
        assert_eq!(target_view.assigned_strategy, None);
        assert_eq!(stake, None);
        let swapped = ServerEvent::StrategySwapped {
            reader_id: "p0".into(),
            strategy: Some(Strategy::Bridging),
            stake: Some(10),
        };
        assert_eq!(
            redact_for(&"p2".into(), &swapped, &s),
            ServerEvent::StrategySwapped { reader_id: "p0".into(), strategy: None, stake: None }
        );
    }

    #[test]
    fn summary_passes_through() {
        let s = state();
        let ev = ServerEvent::SummaryRevealed {
            reader_id: "p0".into(),
            assigned_strategy: Strategy::Paraphrasing,
            stake: 4,
            votes: BTreeMap::new(),
            outcome: OutcomeSummary {
                majority_strategy: None,
                reader_in_majority: false,
                unanimous: false,
            },
            deltas: BTreeMap::new(),
        };
        assert_eq!(redact_for(&"p1".into(), &ev, &s), ev);
    }
}
