//! Dense tensors, a fixed set of differentiable layers, and the SGD/RMSprop
//! optimizers.
//!
//! Everything runs in `f64` on a single sample at a time; minibatches are
//! explicit loops that accumulate gradients before one optimizer step.

mod checkpoint;
mod gemm;
mod layer;
mod optim;
mod sequential;
mod tensor;

use thiserror::Error;

pub use checkpoint::{decode as decode_checkpoint, encode as encode_checkpoint, CheckpointError, NetFile, MAGIC};
pub use layer::{sigmoid, Layer, LayerKind, Param};
pub use optim::{OptimizerKind, OptimizerSpec};
pub use sequential::{ChainBuilder, Sequential};
pub use tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("invalid shape {0:?}: dimensions must be positive")]
    InvalidShape(Vec<usize>),
    #[error("shape {shape:?} holds {expected} values but {actual} were supplied")]
    DataLength {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("{layer}: input {axis} {extent} is smaller than the kernel ({kernel})")]
    KernelTooLarge {
        layer: &'static str,
        axis: &'static str,
        extent: usize,
        kernel: usize,
    },
    #[error("{layer}: expected a rank-{expected} input, got {actual:?}")]
    Rank {
        layer: &'static str,
        expected: usize,
        actual: Vec<usize>,
    },
    #[error("{layer}: expected shape {expected:?}, got {actual:?}")]
    ShapeMismatch {
        layer: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("{layer}: {reason}")]
    InvalidParams { layer: &'static str, reason: String },
    #[error("{layer}: backward called without a preceding forward")]
    NoForward { layer: &'static str },
}
