//! Reward machinery: binarizing predicted event probabilities, scoring them
//! against observed events, and mapping the score to a scalar reward.

use std::fmt;

use crate::networks::{ActionId, EventProbs};

pub const EVENT_COUNT: usize = 3;
pub const EVENT_NAMES: [&str; EVENT_COUNT] = ["handshake", "eye_contact", "smile"];

/// Binary occurrence of (handshake, eye contact, smile).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EventVector([bool; EVENT_COUNT]);

impl EventVector {
    pub const NONE: EventVector = EventVector([false; EVENT_COUNT]);

    pub fn new(handshake: bool, eye_contact: bool, smile: bool) -> Self {
        Self([handshake, eye_contact, smile])
    }

    pub fn from_bits(bits: [u8; EVENT_COUNT]) -> Option<Self> {
        let mut out = [false; EVENT_COUNT];
        for (o, b) in out.iter_mut().zip(bits) {
            *o = match b {
                0 => false,
                1 => true,
                _ => return None,
            };
        }
        Some(Self(out))
    }

    pub fn bits(&self) -> [u8; EVENT_COUNT] {
        self.0.map(u8::from)
    }

    pub fn as_f64(&self) -> [f64; EVENT_COUNT] {
        self.0.map(|b| if b { 1.0 } else { 0.0 })
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn handshake(&self) -> bool {
        self.0[0]
    }

    pub fn eye_contact(&self) -> bool {
        self.0[1]
    }

    pub fn smile(&self) -> bool {
        self.0[2]
    }

    pub fn fired(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for EventVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.bits();
        write!(f, "({a},{b},{c})")
    }
}

/// Thresholds each probability at 0.5, with 0.5 itself rounding up.
pub fn round_predictions(probs: &EventProbs) -> EventVector {
    EventVector(probs.values().map(|p| p >= 0.5))
}

/// Number of positions where the prediction matches the observation.
pub fn count_correct(predicted: EventVector, actual: EventVector) -> usize {
    predicted
        .0
        .iter()
        .zip(actual.0.iter())
        .filter(|(p, a)| p == a)
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictionOutcome {
    pub rounded: EventVector,
    pub correct_count: usize,
    pub per_event: [bool; EVENT_COUNT],
}

pub fn score_prediction(probs: &EventProbs, actual: EventVector) -> PredictionOutcome {
    let rounded = round_predictions(probs);
    let per_event = std::array::from_fn(|i| rounded.get(i) == actual.get(i));
    PredictionOutcome {
        rounded,
        correct_count: count_correct(rounded, actual),
        per_event,
    }
}

/// What a reward function may look at besides the correct-prediction count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RewardContext {
    pub action: ActionId,
    pub events: EventVector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewardFunction {
    /// Reward indexed by the number of correctly predicted events.
    Intrinsic { name: String, table: [f64; 4] },
    /// Task reward for handshakes: +1 on success, -0.1 on failure, 0 otherwise.
    Direct,
}

impl RewardFunction {
    pub const PRESETS: [&'static str; 9] = [
        "strict",
        "neutral",
        "kind",
        "neutral_p0",
        "neutral_p01",
        "neutral_p02",
        "neutral_p05",
        "neutral_p1",
        "direct",
    ];

    pub fn intrinsic(name: impl Into<String>, table: [f64; 4]) -> Result<Self, String> {
        let name = name.into();
        if table.iter().any(|v| !v.is_finite()) {
            return Err(format!("reward table `{name}` has non-finite entries"));
        }
        if table[..3].iter().any(|&v| v > table[3]) {
            return Err(format!(
                "reward table `{name}`: all-correct entry must be the maximum"
            ));
        }
        Ok(Self::Intrinsic { name, table })
    }

    pub fn preset(name: &str) -> Option<Self> {
        let table = match name {
            "strict" => [-0.1, -0.1, -0.1, 1.0],
            "neutral" => [-0.1, 0.0, 0.0, 1.0],
            "kind" => [-0.1, 0.8, 0.9, 1.0],
            "neutral_p0" => [0.0, 0.0, 0.0, 1.0],
            "neutral_p01" => [-0.1, 0.0, 0.0, 1.0],
            "neutral_p02" => [-0.2, 0.0, 0.0, 1.0],
            "neutral_p05" => [-0.5, 0.0, 0.0, 1.0],
            "neutral_p1" => [-1.0, 0.0, 0.0, 1.0],
            "direct" => return Some(Self::Direct),
            _ => return None,
        };
        Some(Self::Intrinsic {
            name: name.to_string(),
            table,
        })
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Intrinsic { name, .. } => name,
            Self::Direct => "direct",
        }
    }

    /// True when the reward depends on the predictor.
    pub fn uses_predictor(&self) -> bool {
        matches!(self, Self::Intrinsic { .. })
    }
}

impl fmt::Display for RewardFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps a correct-prediction count (or, for the direct baseline, the
/// handshake outcome) to a scalar reward.
pub fn compute_reward(function: &RewardFunction, count: usize, ctx: RewardContext) -> f64 {
    match function {
        RewardFunction::Intrinsic { table, .. } => table[count.min(EVENT_COUNT)],
        RewardFunction::Direct => {
            if ctx.action != ActionId::HANDSHAKE {
                0.0
            } else if ctx.events.handshake() {
                1.0
            } else {
                -0.1
            }
        }
    }
}
