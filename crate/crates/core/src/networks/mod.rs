//! Pnet (action-conditional event predictor) and the dual-stream Qnet, plus
//! fusion, Bellman targets and checkpoint persistence.

mod action;
mod arch;
mod persist;
mod pnet;
mod qnet;

use std::fmt;

use thiserror::Error;

use crate::intrinsic::EVENT_COUNT;
use crate::socialsim::Frame;
use crate::tensorcore::{CheckpointError, Tensor, TensorError};

pub use action::ActionId;
pub use arch::{Architecture, ConvStage};
pub use persist::{decode_chains, encode_chains, load_pnet, load_qnet, save_pnet, save_qnet, Role};
pub use pnet::{bce_loss, PNetwork, PnetSample};
pub use qnet::{
    bellman_targets, fuse_and_select, greedy_action, qnet_train_step, Fusion, QNetwork, QStream,
    StreamSelection,
};

/// Frames per modality in a state.
pub const STACK_DEPTH: usize = 8;
/// Predicted probabilities are kept this far from 0 and 1.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("checkpoint: {0}")]
    Layout(String),
    #[error("state: {0}")]
    State(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Predicted occurrence probabilities of (handshake, eye contact, smile).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventProbs([f64; EVENT_COUNT]);

impl EventProbs {
    /// Clamps every value into `[PROB_CLAMP, 1 - PROB_CLAMP]`.
    pub fn new(values: [f64; EVENT_COUNT]) -> Self {
        Self(values.map(|v| v.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)))
    }

    pub fn values(&self) -> [f64; EVENT_COUNT] {
        self.0
    }
}

impl fmt::Display for EventProbs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0;
        write!(f, "({a:.4},{b:.4},{c:.4})")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Grayscale,
    Depth,
}

/// Stacks of the eight most recent grayscale and depth frames; index 7 is
/// the newest.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub grayscale: Tensor,
    pub depth: Tensor,
}

impl State {
    pub fn from_frames<'a>(
        grayscale: impl IntoIterator<Item = &'a Frame>,
        depth: impl IntoIterator<Item = &'a Frame>,
    ) -> Result<Self, NetworkError> {
        let grayscale = stack(grayscale)?;
        let depth = stack(depth)?;
        if grayscale.shape() != depth.shape() {
            return Err(NetworkError::State(format!(
                "grayscale {:?} and depth {:?} stacks differ in size",
                grayscale.shape(),
                depth.shape()
            )));
        }
        Ok(Self { grayscale, depth })
    }

    pub fn modality(&self, m: Modality) -> &Tensor {
        match m {
            Modality::Grayscale => &self.grayscale,
            Modality::Depth => &self.depth,
        }
    }
}

fn stack<'a>(frames: impl IntoIterator<Item = &'a Frame>) -> Result<Tensor, NetworkError> {
    let mut dims = None;
    let mut data = Vec::new();
    let mut count = 0;
    for f in frames {
        let d = (f.height(), f.width());
        if *dims.get_or_insert(d) != d {
            return Err(NetworkError::State("frames in a stack differ in size".into()));
        }
        f.extend_intensities(&mut data);
        count += 1;
    }
    let (h, w) = dims.ok_or_else(|| NetworkError::State("no frames".into()))?;
    if count != STACK_DEPTH {
        return Err(NetworkError::State(format!(
            "expected {STACK_DEPTH} frames, got {count}"
        )));
    }
    Ok(Tensor::new(vec![STACK_DEPTH, h, w], data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probs_are_clamped() {
        let p = EventProbs::new([0.0, 1.0, 0.3]);
        assert_eq!(p.values(), [1e-12, 1.0 - 1e-12, 0.3]);
    }

    #[test]
    fn state_stacks_frames_in_order() {
        let frames: Vec<Frame> = (0..8u8)
            .map(|i| Frame::new(2, 2, vec![i; 4]).unwrap())
            .collect();
        let s = State::from_frames(&frames, &frames).unwrap();
        assert_eq!(s.grayscale.shape(), &[8, 2, 2]);
        assert_eq!(s.grayscale.data()[7 * 4], 7.0 / 255.0);
        assert!(State::from_frames(&frames[..7], &frames[..7]).is_err());
        let odd = Frame::new(1, 4, vec![0; 4]).unwrap();
        let mut mixed = frames.clone();
        mixed[3] = odd;
        assert!(State::from_frames(&mixed, &frames).is_err());
    }
}
