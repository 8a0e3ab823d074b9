/// Distance band derived from a person's distance to the robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Zone {
    Near,
    Mid,
    Far,
}

impl Zone {
    pub const NEAR_LIMIT: f64 = 1.2;
    pub const MID_LIMIT: f64 = 3.0;

    pub fn of(distance: f64) -> Self {
        if distance < Self::NEAR_LIMIT {
            Zone::Near
        } else if distance <= Self::MID_LIMIT {
            Zone::Mid
        } else {
            Zone::Far
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gaze {
    AtRobot,
    Away,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Motion {
    Approaching,
    Leaving,
    Standing,
}

/// One simulated pedestrian.
#[derive(Debug, Clone, PartialEq)]
pub struct Person {
    /// Metres from the robot, within `[MIN_DISTANCE, MAX_DISTANCE]`.
    pub distance: f64,
    /// Metres left (negative) or right (positive) of the optical axis.
    pub lateral: f64,
    pub gaze: Gaze,
    pub motion: Motion,
    pub busy: bool,
    /// Where an approaching person will stop and stand.
    pub stop_distance: f64,
}

impl Person {
    pub const MIN_DISTANCE: f64 = 0.5;
    pub const MAX_DISTANCE: f64 = 6.0;

    pub fn zone(&self) -> Zone {
        Zone::of(self.distance)
    }

    /// Neither walking away nor occupied with something else.
    pub fn available(&self) -> bool {
        self.motion != Motion::Leaving && !self.busy
    }

    pub fn fully_engaged(&self) -> bool {
        self.available() && self.zone() == Zone::Near && self.gaze == Gaze::AtRobot
    }
}
