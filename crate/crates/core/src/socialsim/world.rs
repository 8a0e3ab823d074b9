use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::emission::Engagement;
use super::person::{Gaze, Motion, Person, Zone};
use super::render::{render_scene, Frame, Image};
use super::{SimConfig, SimError};
use crate::intrinsic::EventVector;
use crate::networks::{ActionId, State, STACK_DEPTH};

/// What one `step` produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: State,
    pub events: EventVector,
    pub terminal: bool,
    /// Scene condition the events were drawn under.
    pub condition: Engagement,
}

/// The socially appropriate action for a scene.
pub fn oracle_action(persons: &[Person]) -> ActionId {
    Engagement::classify(persons).appropriate_action()
}

/// A seeded scene with up to `persons_max` pedestrians and the last eight
/// rendered frames of each modality.
///
/// Events and dynamics draw from separate random streams, so the event
/// sequence for a given (seed, action sequence) does not depend on how many
/// values the dynamics consume.
#[derive(Debug, Clone)]
pub struct World {
    config: SimConfig,
    persons: Vec<Person>,
    step: usize,
    grayscale: VecDeque<Frame>,
    depth: VecDeque<Frame>,
    events_rng: ChaCha8Rng,
    dynamics_rng: ChaCha8Rng,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl World {
    /// Starts an episode: draws the initial scene and fills the history with
    /// eight copies of its first rendering.
    pub fn reset(config: SimConfig, seed: u64) -> Result<Self, SimError> {
        config.validate().map_err(SimError::Config)?;
        let mut dynamics_rng = stream(seed, 1);
        let mut persons = Vec::new();
        for _ in 0..config.persons_max {
            if dynamics_rng.gen::<f64>() < config.dynamics.initial_presence_prob {
                persons.push(spawn_initial(&config, &mut dynamics_rng));
            }
        }
        Ok(Self::assemble(config, persons, seed, dynamics_rng))
    }

    /// Starts an episode from a given scene.
    pub fn with_persons(config: SimConfig, persons: Vec<Person>, seed: u64) -> Result<Self, SimError> {
        config.validate().map_err(SimError::Config)?;
        if persons.len() > config.persons_max {
            return Err(SimError::Config(format!(
                "{} persons exceed sim.persons_max = {}",
                persons.len(),
                config.persons_max
            )));
        }
        Ok(Self::assemble(config, persons, seed, stream(seed, 1)))
    }

    fn assemble(config: SimConfig, persons: Vec<Person>, seed: u64, dynamics_rng: ChaCha8Rng) -> Self {
        let mut world = Self {
            config,
            persons,
            step: 0,
            grayscale: VecDeque::with_capacity(STACK_DEPTH),
            depth: VecDeque::with_capacity(STACK_DEPTH),
            events_rng: stream(seed, 2),
            dynamics_rng,
        };
        let (g, d) = world.render_frames();
        world.grayscale.extend(std::iter::repeat(g).take(STACK_DEPTH));
        world.depth.extend(std::iter::repeat(d).take(STACK_DEPTH));
        world
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn persons(&self) -> &[Person] {
        &self.persons
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn is_terminal(&self) -> bool {
        self.step >= self.config.episode_steps
    }

    pub fn condition(&self) -> Engagement {
        Engagement::classify(&self.persons)
    }

    pub fn oracle_action(&self) -> ActionId {
        oracle_action(&self.persons)
    }

    pub fn render(&self) -> (Image, Image) {
        render_scene(&self.persons, self.config.resolution, self.config.resolution)
    }

    fn render_frames(&self) -> (Frame, Frame) {
        let (g, d) = self.render();
        (Frame::quantize(&g), Frame::quantize(&d))
    }

    /// Frame history, oldest first.
    pub fn history(&self) -> (&VecDeque<Frame>, &VecDeque<Frame>) {
        (&self.grayscale, &self.depth)
    }

    pub fn state(&self) -> State {
        State::from_frames(&self.grayscale, &self.depth).expect("history holds eight equal frames")
    }

    /// Draws the events the action provokes in the current scene, then
    /// advances the pedestrians one tick and renders the new frames.
    pub fn step(&mut self, action: ActionId) -> Result<StepOutcome, SimError> {
        if self.is_terminal() {
            return Err(SimError::EpisodeOver {
                steps: self.config.episode_steps,
            });
        }
        let condition = self.condition();
        let events = self
            .config
            .emission
            .row(condition, action)
            .draw(&mut self.events_rng);
        self.advance(action, events);
        self.step += 1;
        let (g, d) = self.render_frames();
        self.grayscale.pop_front();
        self.grayscale.push_back(g);
        self.depth.pop_front();
        self.depth.push_back(d);
        Ok(StepOutcome {
            state: self.state(),
            events,
            terminal: self.is_terminal(),
            condition,
        })
    }

    fn advance(&mut self, action: ActionId, events: EventVector) {
        let dy = &self.config.dynamics;
        let rng = &mut self.dynamics_rng;
        let shaker = if events.handshake() {
            self.persons.iter().position(Person::fully_engaged)
        } else {
            None
        };
        let suitable = oracle_action(&self.persons) == action;
        let attending = action == ActionId::LOOK_TOWARDS_HUMAN || action == ActionId::HANDSHAKE;
        let prompting = action == ActionId::LOOK_TOWARDS_HUMAN || action == ActionId::WAVE_HAND;
        let mut kept = Vec::with_capacity(self.persons.len());
        for (i, mut p) in self.persons.drain(..).enumerate() {
            let [u_motion, u_gaze, u_busy, u_shake]: [f64; 4] = rng.gen();
            match p.motion {
                Motion::Approaching => {
                    p.distance -= dy.approach_speed;
                    if p.distance <= p.stop_distance {
                        p.distance = p.stop_distance;
                        p.motion = Motion::Standing;
                    }
                }
                Motion::Leaving => p.distance += dy.leave_speed,
                Motion::Standing => {
                    if u_motion < dy.linger_leave_prob {
                        p.motion = Motion::Leaving;
                    } else if action == ActionId::LOOK_TOWARDS_HUMAN
                        && p.available()
                        && p.zone() == Zone::Mid
                        && p.gaze == Gaze::AtRobot
                        && u_motion < dy.linger_leave_prob + dy.invite_prob
                    {
                        p.motion = Motion::Approaching;
                        p.stop_distance = NEAR_STOP.start + (NEAR_STOP.end - NEAR_STOP.start) * u_shake;
                    }
                }
            }
            if shaker == Some(i) && u_shake < dy.leave_after_handshake_prob {
                p.motion = Motion::Leaving;
            }
            if p.motion == Motion::Leaving {
                p.gaze = Gaze::Away;
            } else {
                p.gaze = match p.gaze {
                    Gaze::Away => {
                        let toward = if prompting {
                            dy.gaze_toward_prob
                        } else {
                            dy.gaze_spontaneous_prob
                        };
                        if u_gaze < toward {
                            Gaze::AtRobot
                        } else {
                            Gaze::Away
                        }
                    }
                    Gaze::AtRobot => {
                        if !attending && u_gaze < dy.gaze_revert_prob {
                            Gaze::Away
                        } else {
                            Gaze::AtRobot
                        }
                    }
                };
            }
            if p.busy {
                if u_busy < dy.busy_release_prob {
                    p.busy = false;
                }
            } else if u_busy < dy.busy_onset_prob && !suitable {
                p.busy = true;
            }
            if p.distance <= Person::MAX_DISTANCE {
                kept.push(p);
            }
        }
        self.persons = kept;
        let free = self.config.persons_max - self.persons.len();
        let arrival = if self.persons.is_empty() {
            self.config.appear_prob
        } else {
            dy.join_prob
        };
        for _ in 0..free {
            if rng.gen::<f64>() < arrival {
                self.persons.push(spawn_arrival(&self.config, rng));
            }
        }
    }
}

const NEAR_STOP: std::ops::Range<f64> = 0.6..1.1;
const MID_STOP: std::ops::Range<f64> = 1.4..2.8;

fn spawn_arrival<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Person {
    let dy = &config.dynamics;
    let stop_distance = if rng.gen::<f64>() < dy.stop_near_prob {
        rng.gen_range(NEAR_STOP)
    } else {
        rng.gen_range(MID_STOP)
    };
    Person {
        distance: rng.gen_range(dy.spawn_near_edge..dy.spawn_far_edge),
        lateral: rng.gen_range(-0.6..0.6),
        gaze: if rng.gen::<f64>() < dy.spawn_looking_prob {
            Gaze::AtRobot
        } else {
            Gaze::Away
        },
        motion: Motion::Approaching,
        busy: rng.gen::<f64>() < dy.spawn_busy_prob,
        stop_distance,
    }
}

/// Like an arrival, but already somewhere along its approach.
fn spawn_initial<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Person {
    let mut p = spawn_arrival(config, rng);
    p.distance = rng.gen_range(p.stop_distance..=p.distance);
    if Zone::of(p.distance) == Zone::of(p.stop_distance) && rng.gen::<bool>() {
        p.distance = p.stop_distance;
        p.motion = Motion::Standing;
    }
    p
}
