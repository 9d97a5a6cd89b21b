//! Tunable rule parameters.
//!
//! The document form is the JSON serialization of [`GameConfig`]; partial
//! documents are accepted by [`GameConfig::with_overrides`] and fill in from
//! the defaults.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::game::cards::{EventCard, PowerCardKind};
use crate::strategy::Strategy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub min_players: usize,
    pub max_players: usize,
    pub board_length: u32,
    pub die_sides: u32,
    pub strategy_points: BTreeMap<Strategy, u32>,
    pub agreement_bonus: u32,
    /// Divides the stake for guessers in a majority that excludes the reader.
    pub minority_guesser_points_divisor: u32,
    pub persuasion_points: u32,
    pub power_card_costs: BTreeMap<PowerCardKind, u32>,
    pub stake_alter_cost: u32,
    pub stake_alter_multiplier: u32,
    pub strategy_swap_cost: u32,
    pub hand_limit: usize,
    /// Seconds.
    pub vote_timeout: u64,
    pub discussion_timeout: u64,
    pub powercard_window_timeout: u64,
    pub event_deck_spec: Vec<EventCard>,
    pub power_deck_spec: Vec<PowerCardKind>,
    /// Draw each turn's strategy at random instead of using the pack's.
    #[serde(default)]
    pub random_strategy_assignment: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("player bounds must satisfy 2 <= min_players <= max_players (got {min}..{max})")]
    PlayerBounds { min: usize, max: usize },
    #[error("board_length must be at least 2")]
    BoardTooShort,
    #[error("die_sides must be at least 2")]
    DieTooSmall,
    #[error("no point value for strategy {0}")]
    MissingStrategyPoints(Strategy),
    #[error("no cost for power card {0:?}")]
    MissingCardCost(PowerCardKind),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("{0} deck spec is empty")]
    EmptyDeck(&'static str),
    #[error("event card distance must be 1..=3, got {0}")]
    EventDistance(u8),
    #[error("invalid config document: {0}")]
    Document(String),
}

impl Default for GameConfig {
    fn default() -> Self {
        let strategy_points = BTreeMap::from([
            (Strategy::Paraphrasing, 4),
            (Strategy::Prediction, 6),
            (Strategy::ComprehensionMonitoring, 8),
            (Strategy::Elaboration, 8),
            (Strategy::Bridging, 10),
        ]);
        let power_card_costs = BTreeMap::from([
            (PowerCardKind::ExtraDraw, 3),
            (PowerCardKind::FreezePlayer, 5),
            (PowerCardKind::ExtraTurn, 6),
        ]);
        let mut event_deck_spec = Vec::new();
        for n in 1..=3 {
            event_deck_spec.extend([EventCard::MoveForward(n); 3]);
        }
        for n in 1..=3 {
            event_deck_spec.extend([EventCard::MoveBackward(n); 2]);
        }
        event_deck_spec.extend([EventCard::DrawPowerCard; 6]);
        let power_deck_spec = PowerCardKind::ALL
            .iter()
            .flat_map(|k| std::iter::repeat(*k).take(8))
            .collect();

        GameConfig {
            min_players: 2,
            max_players: 6,
            board_length: 40,
            die_sides: 6,
            strategy_points,
            agreement_bonus: 5,
            minority_guesser_points_divisor: 4,
            persuasion_points: 2,
            power_card_costs,
            stake_alter_cost: 3,
            stake_alter_multiplier: 2,
            strategy_swap_cost: 4,
            hand_limit: 3,
            vote_timeout: 60,
            discussion_timeout: 120,
            powercard_window_timeout: 30,
            event_deck_spec,
            power_deck_spec,
            random_strategy_assignment: false,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.min_players < 2 || self.min_players > self.max_players {
            return Err(ConfigError::PlayerBounds {
                min: self.min_players,
                max: self.max_players,
            });
        }
        if self.board_length < 2 {
            return Err(ConfigError::BoardTooShort);
        }
        if self.die_sides < 2 {
            return Err(ConfigError::DieTooSmall);
        }
        for s in Strategy::ALL {
            if !self.strategy_points.contains_key(&s) {
                return Err(ConfigError::MissingStrategyPoints(s));
            }
        }
        for k in PowerCardKind::ALL {
            if !self.power_card_costs.contains_key(&k) {
                return Err(ConfigError::MissingCardCost(k));
            }
        }
        if self.minority_guesser_points_divisor == 0 {
            return Err(ConfigError::NotPositive("minority_guesser_points_divisor"));
        }
        if self.stake_alter_multiplier == 0 {
            return Err(ConfigError::NotPositive("stake_alter_multiplier"));
        }
        if self.event_deck_spec.is_empty() {
            return Err(ConfigError::EmptyDeck("event"));
        }
        if self.power_deck_spec.is_empty() {
            return Err(ConfigError::EmptyDeck("power"));
        }
        for card in &self.event_deck_spec {
            if let EventCard::MoveForward(n) | EventCard::MoveBackward(n) = *card {
                if !(1..=3).contains(&n) {
                    return Err(ConfigError::EventDistance(n));
                }
            }
        }
        Ok(())
    }

    pub fn points_for(&self, strategy: Strategy) -> u32 {
        self.strategy_points.get(&strategy).copied().unwrap_or(0)
    }

    pub fn card_cost(&self, kind: PowerCardKind) -> u32 {
        self.power_card_costs.get(&kind).copied().unwrap_or(0)
    }

    /// Overlay a (possibly partial) JSON object onto this config and validate.
    /// Unknown keys are rejected.
    pub fn with_overrides(&self, overrides: &Value) -> Result<GameConfig, ConfigError> {
        let mut doc = serde_json::to_value(self).map_err(|e| ConfigError::Document(e.to_string()))?;
        match overrides {
            Value::Null => {}
            Value::Object(map) => {
                let base = doc.as_object_mut().expect("config serializes as an object");
                for (k, v) in map {
                    base.insert(k.clone(), v.clone());
                }
            }
            _ => return Err(ConfigError::Document("overrides must be an object".into())),
        }
        let cfg: GameConfig =
            serde_json::from_value(doc).map_err(|e| ConfigError::Document(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<GameConfig, ConfigError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Document(e.to_string()))?;
        GameConfig::default().with_overrides(&value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_are_valid() {
        let cfg = GameConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.event_deck_spec.len(), 21);
        assert_eq!(cfg.power_deck_spec.len(), 24);
        assert_eq!(cfg.points_for(Strategy::Bridging), 10);
    }

    #[test]
    fn board_length_one_is_rejected() {
        let err = GameConfig::default()
            .with_overrides(&json!({"board_length": 1}))
            .unwrap_err();
        assert_eq!(err, ConfigError::BoardTooShort);
    }

    #[test]
    fn partial_overrides_keep_defaults() {
        let cfg = GameConfig::default()
            .with_overrides(&json!({"agreement_bonus": 9}))
            .unwrap();
        assert_eq!(cfg.agreement_bonus, 9);
        assert_eq!(cfg.board_length, 40);
    }

    #[test]
    fn unknown_keys_and_bad_shapes_are_rejected() {
        assert!(matches!(
            GameConfig::default().with_overrides(&json!({"nope": 1})),
            Err(ConfigError::Document(_))
        ));
        assert!(matches!(
            GameConfig::default().with_overrides(&json!([1])),
            Err(ConfigError::Document(_))
        ));
    }

    #[test]
    fn invariant_violations() {
        let base = GameConfig::default();
        assert!(matches!(
            base.with_overrides(&json!({"min_players": 1})),
            Err(ConfigError::PlayerBounds { .. })
        ));
        assert!(matches!(
            base.with_overrides(&json!({"min_players": 5, "max_players": 4})),
            Err(ConfigError::PlayerBounds { .. })
        ));
        assert_eq!(
            base.with_overrides(&json!({"die_sides": 1})).unwrap_err(),
            ConfigError::DieTooSmall
        );
        assert_eq!(
            base.with_overrides(&json!({"event_deck_spec": []})).unwrap_err(),
            ConfigError::EmptyDeck("event")
        );
        assert_eq!(
            base.with_overrides(&json!({"strategy_points": {"bridging": 3}}))
                .unwrap_err(),
            ConfigError::MissingStrategyPoints(Strategy::ComprehensionMonitoring)
        );
        assert_eq!(
            base.with_overrides(&json!({"event_deck_spec": [{"move_forward": 5}]}))
                .unwrap_err(),
            ConfigError::EventDistance(5)
        );
    }
}
