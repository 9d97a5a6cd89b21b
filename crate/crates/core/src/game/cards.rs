use serde::{Deserialize, Serialize};

use crate::rng::GameRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerCardKind {
    ExtraTurn,
    FreezePlayer,
    ExtraDraw,
}

impl PowerCardKind {
    pub const ALL: [PowerCardKind; 3] = [
        PowerCardKind::ExtraTurn,
        PowerCardKind::FreezePlayer,
        PowerCardKind::ExtraDraw,
    ];

    pub fn needs_target(self) -> bool {
        matches!(self, PowerCardKind::FreezePlayer)
    }
}

/// Drawn automatically after the die roll.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventCard {
    MoveForward(u8),
    MoveBackward(u8),
    DrawPowerCard,
}

/// A draw pile with its discard pile. Cards are drawn from the end of
/// `draw`; when `draw` runs dry the discards are shuffled back in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deck<T> {
    pub draw: Vec<T>,
    pub discard: Vec<T>,
}

impl<T: Clone> Deck<T> {
    pub fn shuffled(spec: &[T], rng: &mut GameRng) -> Self {
        let mut draw = spec.to_vec();
        rng.shuffle(&mut draw);
        Deck {
            draw,
            discard: Vec::new(),
        }
    }

    pub fn draw(&mut self, rng: &mut GameRng) -> Option<T> {
        if self.draw.is_empty() && !self.discard.is_empty() {
            self.draw = std::mem::take(&mut self.discard);
            rng.shuffle(&mut self.draw);
        }
        self.draw.pop()
    }

    pub fn discard(&mut self, card: T) {
        self.discard.push(card);
    }

    pub fn len(&self) -> usize {
        self.draw.len() + self.discard.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
