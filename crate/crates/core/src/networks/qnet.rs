use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::{ActionId, Architecture, Modality, NetworkError, State};
use crate::tensorcore::{OptimizerSpec, Sequential, Tensor};

pub type QValues = [f64; ActionId::COUNT];

/// How the two streams' q-values are combined before the argmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fusion {
    /// Min-max normalize each stream, then average. A constant stream maps
    /// to all 0.5.
    #[default]
    MinMax,
    /// Average the raw values.
    Mean,
}

impl Fusion {
    pub fn name(self) -> &'static str {
        match self {
            Fusion::MinMax => "minmax",
            Fusion::Mean => "mean",
        }
    }
}

impl fmt::Display for Fusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Fusion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minmax" => Ok(Fusion::MinMax),
            "mean" => Ok(Fusion::Mean),
            _ => Err(format!("unknown fusion `{s}` (expected minmax or mean)")),
        }
    }
}

/// Which streams feed action selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StreamSelection {
    #[default]
    Both,
    GrayscaleOnly,
    DepthOnly,
}

/// Argmax with ties going to the lowest action index.
pub fn greedy_action(q: &QValues) -> ActionId {
    let mut best = 0;
    for i in 1..q.len() {
        if q[i] > q[best] {
            best = i;
        }
    }
    ActionId::new(best).expect("index below COUNT")
}

fn min_max(q: &QValues) -> QValues {
    let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return [0.5; ActionId::COUNT];
    }
    q.map(|v| (v - lo) / (hi - lo))
}

pub fn fuse_and_select(q_gray: &QValues, q_depth: &QValues, fusion: Fusion) -> ActionId {
    let (g, d) = match fusion {
        Fusion::MinMax => (min_max(q_gray), min_max(q_depth)),
        Fusion::Mean => (*q_gray, *q_depth),
    };
    greedy_action(&std::array::from_fn(|i| (g[i] + d[i]) / 2.0))
}

fn q_of(net: &mut Sequential, x: &Tensor) -> Result<QValues, NetworkError> {
    let out = net.forward(x)?;
    let d = out.data();
    Ok([d[0], d[1], d[2], d[3]])
}

/// `B_k = r_k` at terminal steps, otherwise `r_k + gamma * max_a Q(s', a)`
/// evaluated with `target`.
pub fn bellman_targets(
    rewards: &[f64],
    next_states: &[&Tensor],
    terminal: &[bool],
    target: &mut Sequential,
    gamma: f64,
) -> Result<Vec<f64>, NetworkError> {
    assert_eq!(rewards.len(), next_states.len());
    assert_eq!(rewards.len(), terminal.len());
    let mut out = Vec::with_capacity(rewards.len());
    for ((&r, &s), &done) in rewards.iter().zip(next_states).zip(terminal) {
        if done {
            out.push(r);
        } else {
            let q = q_of(target, s)?;
            let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            out.push(r + gamma * best);
        }
    }
    Ok(out)
}

/// One optimizer step on the mean squared Bellman error of the taken
/// actions. Returns the loss measured before the step.
pub fn qnet_train_step(
    stream: &mut Sequential,
    states: &[&Tensor],
    actions: &[ActionId],
    targets: &[f64],
    spec: &OptimizerSpec,
) -> Result<f64, NetworkError> {
    if states.is_empty() {
        return Err(NetworkError::EmptyBatch);
    }
    assert_eq!(states.len(), actions.len());
    assert_eq!(states.len(), targets.len());
    let n = states.len() as f64;
    stream.zero_grads();
    let mut loss = 0.0;
    for ((&s, &a), &b) in states.iter().zip(actions).zip(targets) {
        let q = q_of(stream, s)?;
        let diff = q[a.index()] - b;
        loss += diff * diff;
        let mut up = [0.0; ActionId::COUNT];
        up[a.index()] = 2.0 * diff / n;
        stream.backward_params(&Tensor::from_slice(&up))?;
    }
    stream.optimizer_step(spec);
    Ok(loss / n)
}

/// A learning stream and its frozen target copy.
#[derive(Debug, Clone, PartialEq)]
pub struct QStream {
    pub learning: Sequential,
    pub target: Sequential,
}

impl QStream {
    pub fn new<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<Self, NetworkError> {
        let learning = arch.q_stream().build(rng)?;
        let target = learning.clone();
        Ok(Self { learning, target })
    }

    pub fn q_values(&mut self, x: &Tensor) -> Result<QValues, NetworkError> {
        q_of(&mut self.learning, x)
    }

    pub fn target_q_values(&mut self, x: &Tensor) -> Result<QValues, NetworkError> {
        q_of(&mut self.target, x)
    }

    pub fn sync(&mut self) {
        self.target.copy_values_from(&self.learning);
    }
}

/// Dual-stream action-value network over grayscale and depth stacks.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    arch: Architecture,
    pub grayscale: QStream,
    pub depth: QStream,
}

impl QNetwork {
    pub fn new<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self, NetworkError> {
        let grayscale = QStream::new(&arch, rng)?;
        let depth = QStream::new(&arch, rng)?;
        Ok(Self {
            arch,
            grayscale,
            depth,
        })
    }

    /// Wraps existing streams; the caller is responsible for checking them
    /// against `arch`.
    pub(crate) fn from_streams(arch: Architecture, grayscale: QStream, depth: QStream) -> Self {
        Self {
            arch,
            grayscale,
            depth,
        }
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn stream_mut(&mut self, m: Modality) -> &mut QStream {
        match m {
            Modality::Grayscale => &mut self.grayscale,
            Modality::Depth => &mut self.depth,
        }
    }

    pub fn q_values(&mut self, state: &State) -> Result<(QValues, QValues), NetworkError> {
        Ok((
            self.grayscale.q_values(&state.grayscale)?,
            self.depth.q_values(&state.depth)?,
        ))
    }

    pub fn select(
        &mut self,
        state: &State,
        fusion: Fusion,
        streams: StreamSelection,
    ) -> Result<ActionId, NetworkError> {
        Ok(match streams {
            StreamSelection::Both => {
                let (g, d) = self.q_values(state)?;
                fuse_and_select(&g, &d, fusion)
            }
            StreamSelection::GrayscaleOnly => greedy_action(&self.grayscale.q_values(&state.grayscale)?),
            StreamSelection::DepthOnly => greedy_action(&self.depth.q_values(&state.depth)?),
        })
    }

    pub fn sync_targets(&mut self) {
        self.grayscale.sync();
        self.depth.sync();
    }

    pub fn targets_synced(&self) -> bool {
        self.grayscale.learning.same_values(&self.grayscale.target)
            && self.depth.learning.same_values(&self.depth.target)
    }

    pub fn same_values(&self, other: &QNetwork) -> bool {
        [
            (&self.grayscale.learning, &other.grayscale.learning),
            (&self.grayscale.target, &other.grayscale.target),
            (&self.depth.learning, &other.depth.learning),
            (&self.depth.target, &other.depth.target),
        ]
        .iter()
        .all(|(a, b)| a.same_values(b))
    }
}
