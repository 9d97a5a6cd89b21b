use std::collections::BTreeMap;

use crate::config::GameConfig;
use crate::content::{PackLibrary, TextPack};
use crate::game::cards::PowerCardKind;
use crate::game::{Phase, PlayerId};
use crate::protocol::{decode, encode, ClientCommand, Envelope, Message, PlayerView, ServerEvent};
use crate::rng::{derive_seed, GameRng};
use crate::server::hub::{ConnId, Delivery, Hub};

use super::{bot_act, BotPolicy, Observation};

/// A bot that only knows what arrives over the wire.
#[derive(Debug, Clone)]
pub struct WireBot {
    pub policy: BotPolicy,
    rng: GameRng,
    obs: Observation,
    rolled: bool,
    cards_blocked: bool,
}

impl WireBot {
    pub fn new(policy: BotPolicy, seed: u64) -> Self {
        WireBot {
            policy,
            rng: GameRng::from_seed(seed),
            obs: Observation::default(),
            rolled: false,
            cards_blocked: false,
        }
    }

    pub fn observation(&self) -> &Observation {
        &self.obs
    }

    pub fn player_id(&self) -> &PlayerId {
        &self.obs.me
    }

    fn standings(&mut self, players: &[PlayerView]) {
        let me = self.obs.me.clone();
        if let Some(p) = players.iter().find(|p| p.player_id == me) {
            self.obs.points = p.points;
            if let Some(hand) = &p.hand {
                self.obs.hand = hand.clone();
            }
        }
        self.obs.freeze_targets = players
            .iter()
            .filter(|p| p.player_id != me && !p.frozen)
            .map(|p| p.player_id.clone())
            .collect();
    }

    fn new_turn(&mut self) {
        let o = &mut self.obs;
        o.se_posted = false;
        o.my_round1_vote = None;
        o.my_round2_vote = None;
        o.round1_votes = BTreeMap::new();
        o.ready = false;
        o.extra_turn_pending = false;
    }

    pub fn observe(&mut self, event: &ServerEvent) {
        match event {
            ServerEvent::Welcome { player_id, .. } => self.obs.me = player_id.clone(),
            ServerEvent::LobbyState { config, .. } => {
                self.obs.card_costs = config.power_card_costs.clone();
            }
            ServerEvent::GameStarted { snapshot } => {
                self.obs.phase = Some(snapshot.phase);
                self.obs.reader_id = Some(snapshot.reader_id.clone());
                self.obs.card_costs = snapshot.config.power_card_costs.clone();
                self.obs.assigned_strategy = None;
                self.new_turn();
                self.standings(&snapshot.players);
            }
            ServerEvent::PhaseChanged { to, .. } => {
                self.obs.phase = Some(*to);
                self.rolled = false;
            }
            ServerEvent::TurnAssigned {
                reader_id,
                target_view,
                ..
            } => {
                self.obs.reader_id = Some(reader_id.clone());
                self.obs.assigned_strategy = target_view.assigned_strategy;
                self.new_turn();
            }
            ServerEvent::StrategySwapped {
                strategy: Some(s), ..
            } => self.obs.assigned_strategy = Some(*s),
            ServerEvent::SEPosted { .. } => self.obs.se_posted = true,
            ServerEvent::SummaryRevealed { votes, .. } => self.obs.round1_votes = votes.clone(),
            ServerEvent::ReadyMarked { player_id } if *player_id == self.obs.me => {
                self.obs.ready = true
            }
            ServerEvent::MovementWindow { .. } => {
                self.rolled = false;
                self.cards_blocked = false;
            }
            ServerEvent::PowerCardPlayed {
                player_id,
                kind: PowerCardKind::ExtraTurn,
                ..
            } if *player_id == self.obs.me => self.obs.extra_turn_pending = true,
            ServerEvent::Standings { players } => self.standings(players),
            ServerEvent::Error { .. } if self.obs.phase == Some(Phase::Movement) => {
                self.cards_blocked = true;
                self.rolled = false;
            }
            _ => {}
        }
    }

    /// The next command to send, updating the local view as if it will
    /// succeed so the same command is not sent twice.
    pub fn next_command(&mut self) -> Option<ClientCommand> {
        if self.rolled {
            return None;
        }
        let mut policy = self.policy;
        if self.cards_blocked {
            policy.spend = super::SpendPolicy::Never;
        }
        let command = bot_act(&policy, &self.obs, &mut self.rng)?;
        match &command {
            ClientCommand::SubmitSE { .. } => self.obs.se_posted = true,
            ClientCommand::Vote { strategy } => match self.obs.phase {
                Some(Phase::Revote) => self.obs.my_round2_vote = Some(*strategy),
                _ => self.obs.my_round1_vote = Some(*strategy),
            },
            ClientCommand::Ready {} => self.obs.ready = true,
            ClientCommand::Roll {} => self.rolled = true,
            ClientCommand::PlayPowerCard { kind, .. } => {
                if let Some(i) = self.obs.hand.iter().position(|k| k == kind) {
                    self.obs.hand.remove(i);
                }
                let cost = self.obs.card_costs.get(kind).copied().unwrap_or(0);
                self.obs.points = self.obs.points.saturating_sub(cost);
            }
            _ => {}
        }
        Some(command)
    }
}

/// Everything observable about one networked game.
#[derive(Debug, Clone)]
pub struct HubGame {
    pub lobby_id: String,
    pub players: Vec<PlayerId>,
    /// Every line each seat received, in order.
    pub transcripts: Vec<Vec<String>>,
    pub log: String,
    pub final_digest: String,
    pub finished: bool,
}

/// Plays one game of wire bots through an in-process [`Hub`] on a virtual
/// clock: when no bot has anything to say, time jumps to the next timer.
pub fn play_hub_game(
    config: &GameConfig,
    policies: &[BotPolicy],
    pack: &TextPack,
    seed: u64,
) -> HubGame {
    let mut packs = PackLibrary::default();
    packs.insert("game", pack.clone());
    let mut entropy = GameRng::from_seed(derive_seed(seed, u64::MAX));
    let mut hub = Hub::new(config.clone(), packs, move || {
        ((entropy.next_u32() as u64) << 32) | entropy.next_u32() as u64
    });
    let conns: Vec<ConnId> = policies.iter().map(|_| hub.connect()).collect();
    let mut bots: Vec<WireBot> = policies
        .iter()
        .enumerate()
        .map(|(i, p)| WireBot::new(*p, derive_seed(seed, i as u64)))
        .collect();
    let mut transcripts = vec![Vec::new(); policies.len()];
    let mut now = 0u64;
    let mut request = 0u64;

    let deliver = |out: Vec<Delivery>, bots: &mut [WireBot], transcripts: &mut [Vec<String>]| {
        for d in out {
            let Some(seat) = conns.iter().position(|c| *c == d.conn) else { continue };
            if let Ok(Envelope { body: Message::Event(ev), .. }) = decode(d.line.as_bytes()) {
                bots[seat].observe(&ev);
            }
            transcripts[seat].push(d.line);
        }
    };
    let mut send = |hub: &mut Hub, seat: usize, command: ClientCommand, now: u64| {
        request += 1;
        let line = encode(&Envelope::command(Some(format!("r{request}")), command)).expect("commands encode");
        hub.receive(conns[seat], line.as_bytes(), now)
    };

    let name = |seat: usize| format!("bot{}", seat + 1);
    let out = send(&mut hub, 0, ClientCommand::Join { name: name(0), lobby: None }, now);
    deliver(out, &mut bots, &mut transcripts);
    let out = send(
        &mut hub,
        0,
        ClientCommand::CreateLobby { config_overrides: serde_json::Value::Null, pack: None },
        now,
    );
    deliver(out, &mut bots, &mut transcripts);
    let lobby_id = hub.lobby_of(conns[0]).expect("lobby created").to_string();
    for seat in 1..policies.len() {
        let out = send(
            &mut hub,
            seat,
            ClientCommand::Join { name: name(seat), lobby: Some(lobby_id.clone()) },
            now,
        );
        deliver(out, &mut bots, &mut transcripts);
    }
    let out = send(&mut hub, 0, ClientCommand::StartGame {}, now);
    deliver(out, &mut bots, &mut transcripts);

    let cap = 10 * config.board_length as u64;
    let finished = |hub: &Hub| {
        hub.session(&lobby_id)
            .and_then(|s| s.game())
            .is_none_or(|g| g.phase == Phase::Finished || g.turns_completed >= cap)
    };
    while !finished(&hub) {
        now += 1;
        let next = bots
            .iter_mut()
            .enumerate()
            .find_map(|(seat, b)| b.next_command().map(|c| (seat, c)));
        let out = match next {
            Some((seat, command)) => send(&mut hub, seat, command, now),
            None => match hub.next_deadline() {
                Some(due) => {
                    now = now.max(due);
                    hub.tick(now)
                }
                None => break,
            },
        };
        deliver(out, &mut bots, &mut transcripts);
    }

    let state = hub.session(&lobby_id).and_then(|s| s.game()).cloned();
    hub.shutdown();
    let log = hub.take_logs().remove(&lobby_id).unwrap_or_default().concat();
    HubGame {
        lobby_id,
        players: bots.iter().map(|b| b.player_id().clone()).collect(),
        transcripts,
        log,
        final_digest: state.as_ref().map(|g| g.digest()).unwrap_or_default(),
        finished: state.is_some_and(|g| g.phase == Phase::Finished),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content::sample_pack;
    use crate::server::log::replay;

    #[test]
    fn hub_game_finishes_and_replays() {
        let policies = [BotPolicy::UNIFORM.greedy(), BotPolicy::UNIFORM, BotPolicy::UNIFORM];
        let game = play_hub_game(&GameConfig::default(), &policies, &sample_pack(), 7);
        assert!(game.finished);
        let report = replay(&game.log).unwrap();
        assert_eq!(report.digest, game.final_digest);
        let again = play_hub_game(&GameConfig::default(), &policies, &sample_pack(), 7);
        assert_eq!(again.transcripts, game.transcripts);
    }
}
