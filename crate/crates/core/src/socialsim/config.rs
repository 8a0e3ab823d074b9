use super::emission::EmissionTable;
use super::person::Person;

/// Per-tick transition probabilities and speeds of the pedestrian model.
#[derive(Debug, Clone, PartialEq)]
pub struct Dynamics {
    /// Metres per tick while approaching.
    pub approach_speed: f64,
    /// Metres per tick while leaving.
    pub leave_speed: f64,
    /// Chance that someone looking away turns to the robot after LTH or H.
    pub gaze_toward_prob: f64,
    /// Chance of turning to the robot unprompted.
    pub gaze_spontaneous_prob: f64,
    /// Chance that someone looking at the robot looks away, unless the robot
    /// is attending to them (LTH or HS).
    pub gaze_revert_prob: f64,
    /// Chance per tick that a busy person becomes free.
    pub busy_release_prob: f64,
    /// Chance per tick that a free person becomes busy while the robot's
    /// action does not suit the scene.
    pub busy_onset_prob: f64,
    /// Chance that someone standing at mid range and looking at the robot
    /// steps into the near zone after LTH.
    pub invite_prob: f64,
    /// Chance that a person leaves right after a successful handshake.
    pub leave_after_handshake_prob: f64,
    /// Chance per tick that someone standing starts to leave.
    pub linger_leave_prob: f64,
    /// Chance that a new arrival intends to stop in the near zone rather
    /// than at mid range.
    pub stop_near_prob: f64,
    pub spawn_looking_prob: f64,
    pub spawn_busy_prob: f64,
    /// Arrivals appear uniformly within this distance range.
    pub spawn_near_edge: f64,
    pub spawn_far_edge: f64,
    /// Chance that each slot is occupied at reset.
    pub initial_presence_prob: f64,
    /// Arrival chance per empty slot while someone is already present.
    /// `appear_prob` applies only to an empty scene.
    pub join_prob: f64,
}

impl Default for Dynamics {
    fn default() -> Self {
        Self {
            approach_speed: 0.3,
            leave_speed: 0.5,
            gaze_toward_prob: 0.3,
            gaze_spontaneous_prob: 0.0,
            gaze_revert_prob: 0.1,
            busy_release_prob: 0.05,
            busy_onset_prob: 0.05,
            invite_prob: 0.3,
            leave_after_handshake_prob: 0.7,
            linger_leave_prob: 0.02,
            stop_near_prob: 0.85,
            spawn_looking_prob: 0.3,
            spawn_busy_prob: 0.05,
            spawn_near_edge: 3.0,
            spawn_far_edge: 4.5,
            initial_presence_prob: 0.5,
            join_prob: 0.15,
        }
    }
}

impl Dynamics {
    pub fn probabilities(&self) -> [(&'static str, f64); 13] {
        [
            ("gaze_toward_prob", self.gaze_toward_prob),
            ("gaze_spontaneous_prob", self.gaze_spontaneous_prob),
            ("gaze_revert_prob", self.gaze_revert_prob),
            ("busy_release_prob", self.busy_release_prob),
            ("busy_onset_prob", self.busy_onset_prob),
            ("invite_prob", self.invite_prob),
            ("leave_after_handshake_prob", self.leave_after_handshake_prob),
            ("linger_leave_prob", self.linger_leave_prob),
            ("stop_near_prob", self.stop_near_prob),
            ("spawn_looking_prob", self.spawn_looking_prob),
            ("spawn_busy_prob", self.spawn_busy_prob),
            ("initial_presence_prob", self.initial_presence_prob),
            ("join_prob", self.join_prob),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub persons_max: usize,
    /// Chance per tick that an empty slot gets a new arrival.
    pub appear_prob: f64,
    /// Frame side in pixels.
    pub resolution: usize,
    pub episode_steps: usize,
    pub dynamics: Dynamics,
    pub emission: EmissionTable,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            persons_max: 3,
            appear_prob: 0.15,
            resolution: 32,
            episode_steps: 1000,
            dynamics: Dynamics::default(),
            emission: EmissionTable::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.persons_max == 0 {
            return Err("sim.persons_max must be positive".into());
        }
        if self.resolution < 8 {
            return Err("sim.resolution must be at least 8".into());
        }
        if self.episode_steps == 0 {
            return Err("sim.episode_steps must be positive".into());
        }
        let unit = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(format!("{name} must lie in [0, 1]"))
            }
        };
        unit("sim.appear_prob", self.appear_prob)?;
        for (name, p) in self.dynamics.probabilities() {
            unit(&format!("sim.{name}"), p)?;
        }
        for (name, v) in [
            ("sim.approach_speed", self.dynamics.approach_speed),
            ("sim.leave_speed", self.dynamics.leave_speed),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(format!("{name} must lie in (0, 1]"));
            }
        }
        let (lo, hi) = (self.dynamics.spawn_near_edge, self.dynamics.spawn_far_edge);
        if !(Person::MIN_DISTANCE..=Person::MAX_DISTANCE).contains(&lo)
            || !(Person::MIN_DISTANCE..=Person::MAX_DISTANCE).contains(&hi)
            || lo >= hi
        {
            return Err("sim.spawn_near_edge and sim.spawn_far_edge must be increasing distances in [0.5, 6]".into());
        }
        self.emission.validate()
    }
}
