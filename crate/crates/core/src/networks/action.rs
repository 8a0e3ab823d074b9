use std::fmt;
use std::str::FromStr;

/// One of the four robot actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(u8);

impl ActionId {
    pub const WAIT: ActionId = ActionId(0);
    pub const LOOK_TOWARDS_HUMAN: ActionId = ActionId(1);
    pub const WAVE_HAND: ActionId = ActionId(2);
    pub const HANDSHAKE: ActionId = ActionId(3);

    pub const COUNT: usize = 4;
    pub const ALL: [ActionId; 4] = [
        Self::WAIT,
        Self::LOOK_TOWARDS_HUMAN,
        Self::WAVE_HAND,
        Self::HANDSHAKE,
    ];

    pub fn new(index: usize) -> Option<Self> {
        (index < Self::COUNT).then_some(ActionId(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Short label: `W`, `LTH`, `H` or `HS`.
    pub fn label(self) -> &'static str {
        ["W", "LTH", "H", "HS"][self.index()]
    }

    pub fn one_hot(self) -> [f64; 4] {
        let mut v = [0.0; 4];
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ActionId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionId::ALL
            .into_iter()
            .find(|a| a.label().eq_ignore_ascii_case(s))
            .or_else(|| s.parse::<usize>().ok().and_then(ActionId::new))
            .ok_or_else(|| format!("unknown action `{s}`"))
    }
}
