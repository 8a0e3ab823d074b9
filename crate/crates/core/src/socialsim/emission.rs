use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::person::{Gaze, Motion, Person, Zone};
use crate::intrinsic::EventVector;
use crate::networks::ActionId;

/// Scene-level engagement condition. Classification follows the oracle's
/// decision table, so each condition has exactly one appropriate action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engagement {
    /// Nobody in view.
    Empty,
    /// Everyone present is leaving or busy.
    Disengaged,
    /// Someone available is near and looking at the robot.
    Engaged,
    /// Someone available is near but looking away, or mid-range and looking.
    Attentive,
    /// Someone available is approaching from mid/far range, looking away.
    Passing,
    /// None of the above.
    Idle,
}

impl Engagement {
    pub const ALL: [Engagement; 6] = [
        Engagement::Empty,
        Engagement::Disengaged,
        Engagement::Engaged,
        Engagement::Attentive,
        Engagement::Passing,
        Engagement::Idle,
    ];

    /// First matching rule wins. Rules after the first quantify over
    /// available persons (neither leaving nor busy).
    pub fn classify(persons: &[Person]) -> Self {
        if persons.is_empty() {
            return Engagement::Empty;
        }
        if persons.iter().all(|p| !p.available()) {
            return Engagement::Disengaged;
        }
        let available = || persons.iter().filter(|p| p.available());
        if available().any(|p| p.zone() == Zone::Near && p.gaze == Gaze::AtRobot) {
            return Engagement::Engaged;
        }
        if available().any(|p| {
            (p.zone() == Zone::Near && p.gaze == Gaze::Away)
                || (p.zone() == Zone::Mid && p.gaze == Gaze::AtRobot)
        }) {
            return Engagement::Attentive;
        }
        if available().any(|p| {
            p.zone() != Zone::Near && p.gaze == Gaze::Away && p.motion == Motion::Approaching
        }) {
            return Engagement::Passing;
        }
        Engagement::Idle
    }

    pub fn appropriate_action(self) -> ActionId {
        match self {
            Engagement::Empty | Engagement::Disengaged | Engagement::Idle => ActionId::WAIT,
            Engagement::Engaged => ActionId::HANDSHAKE,
            Engagement::Attentive => ActionId::LOOK_TOWARDS_HUMAN,
            Engagement::Passing => ActionId::WAVE_HAND,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Engagement::Empty => "empty",
            Engagement::Disengaged => "disengaged",
            Engagement::Engaged => "engaged",
            Engagement::Attentive => "attentive",
            Engagement::Passing => "passing",
            Engagement::Idle => "idle",
        }
    }
}

impl fmt::Display for Engagement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engagement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Engagement::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown engagement condition `{s}`"))
    }
}

/// Event probabilities for one (condition, action) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionRow {
    pub handshake: f64,
    pub eye_contact: f64,
    /// Smile probability when the handshake fired this step.
    pub smile_after_handshake: f64,
    /// Smile probability otherwise.
    pub smile: f64,
}

impl EmissionRow {
    pub const SILENT: EmissionRow = EmissionRow::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(handshake: f64, eye_contact: f64, smile_after_handshake: f64, smile: f64) -> Self {
        Self {
            handshake,
            eye_contact,
            smile_after_handshake,
            smile,
        }
    }

    pub fn probabilities(&self) -> [f64; 4] {
        [
            self.handshake,
            self.eye_contact,
            self.smile_after_handshake,
            self.smile,
        ]
    }

    /// Marginal occurrence probability of each event.
    pub fn marginals(&self) -> [f64; 3] {
        let smile = self.handshake * self.smile_after_handshake + (1.0 - self.handshake) * self.smile;
        [self.handshake, self.eye_contact, smile]
    }

    pub fn expected_fired(&self) -> f64 {
        self.marginals().iter().sum()
    }

    /// Three uniforms are always consumed so the random stream stays aligned
    /// regardless of the table.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> EventVector {
        let u: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        let handshake = u[0] < self.handshake;
        let eye = u[1] < self.eye_contact;
        let smile_p = if handshake {
            self.smile_after_handshake
        } else {
            self.smile
        };
        EventVector::new(handshake, eye, u[2] < smile_p)
    }
}

/// Event probabilities for every (condition, action) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionTable {
    rows: [[EmissionRow; ActionId::COUNT]; 6],
}

impl Default for EmissionTable {
    /// Appropriate actions draw a consistent response: the events they
    /// trigger are near-certain. Inappropriate ones draw ambiguous responses.
    /// Conditions whose appropriate action is to wait respond the same way to
    /// every action.
    fn default() -> Self {
        let vague = EmissionRow::new(0.0, 0.5, 0.0, 0.5);
        let mut rows = [[vague; ActionId::COUNT]; 6];
        rows[Engagement::Empty.index()] = [EmissionRow::SILENT; ActionId::COUNT];
        rows[Engagement::Engaged.index()][ActionId::HANDSHAKE.index()] =
            EmissionRow::new(0.9, 0.99, 0.99, 0.01);
        rows[Engagement::Attentive.index()][ActionId::LOOK_TOWARDS_HUMAN.index()] =
            EmissionRow::new(0.0, 0.99, 0.0, 0.02);
        rows[Engagement::Attentive.index()][ActionId::HANDSHAKE.index()] =
            EmissionRow::new(0.05, 0.45, 0.5, 0.5);
        rows[Engagement::Passing.index()][ActionId::WAVE_HAND.index()] =
            EmissionRow::new(0.0, 0.99, 0.0, 0.99);
        for condition in [Engagement::Disengaged, Engagement::Idle] {
            rows[condition.index()][ActionId::WAIT.index()] = EmissionRow::new(0.0, 0.02, 0.0, 0.99);
        }
        Self { rows }
    }
}

impl EmissionTable {
    pub fn row(&self, condition: Engagement, action: ActionId) -> &EmissionRow {
        &self.rows[condition.index()][action.index()]
    }

    pub fn set_row(&mut self, condition: Engagement, action: ActionId, row: EmissionRow) {
        self.rows[condition.index()][action.index()] = row;
    }

    /// Checks that probabilities are valid, nothing fires in an empty scene,
    /// and handshakes can only follow the handshake action.
    pub fn validate(&self) -> Result<(), String> {
        for condition in Engagement::ALL {
            for action in ActionId::ALL {
                let row = self.row(condition, action);
                if row.probabilities().iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(format!("sim.emission.{condition}.{action}: probabilities must lie in [0, 1]"));
                }
                if action != ActionId::HANDSHAKE && row.handshake != 0.0 {
                    return Err(format!(
                        "sim.emission.{condition}.{action}: handshakes only follow the HS action"
                    ));
                }
                if condition == Engagement::Empty && row.expected_fired() != 0.0 {
                    return Err(format!("sim.emission.empty.{action}: an empty scene emits no events"));
                }
            }
        }
        Ok(())
    }
}
