use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The five reading strategies a self-explanation can exhibit.
///
/// Serialized by snake-case name (`"comprehension_monitoring"`, ...). The
/// declaration order is the canonical order used for tie-free iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ComprehensionMonitoring,
    Paraphrasing,
    Prediction,
    Elaboration,
    Bridging,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::ComprehensionMonitoring,
        Strategy::Paraphrasing,
        Strategy::Prediction,
        Strategy::Elaboration,
        Strategy::Bridging,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::ComprehensionMonitoring => "comprehension_monitoring",
            Strategy::Paraphrasing => "paraphrasing",
            Strategy::Prediction => "prediction",
            Strategy::Elaboration => "elaboration",
            Strategy::Bridging => "bridging",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// The four strategies other than `self`, in canonical order.
    pub fn others(self) -> [Strategy; 4] {
        let mut out = [Strategy::Bridging; 4];
        let mut k = 0;
        for s in Strategy::ALL {
            if s != self {
                out[k] = s;
                k += 1;
            }
        }
        out
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown strategy `{0}`")]
pub struct UnknownStrategy(pub String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}
