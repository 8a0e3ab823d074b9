//! Simulated pedestrians in front of the robot: dynamics, rendering, event
//! emission, and the oracle's choice of socially appropriate action.

mod config;
mod emission;
mod person;
mod render;
mod world;

use thiserror::Error;

pub use config::{Dynamics, SimConfig};
pub use emission::{EmissionRow, EmissionTable, Engagement};
pub use person::{Gaze, Motion, Person, Zone};
pub use render::{render_scene, Frame, Image, BODY, HEAD_AWAY, HEAD_LOOKING, PROP};
pub use world::{oracle_action, StepOutcome, World};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("episode already ended after {steps} steps")]
    EpisodeOver { steps: usize },
    #[error("simulator config: {0}")]
    Config(String),
}
