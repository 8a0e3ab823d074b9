//! Replay memory, minibuffer and minibatch sampling, and the on-disk
//! transition log.

mod log;

use std::collections::VecDeque;

use rand::Rng;
use thiserror::Error;

use crate::intrinsic::EventVector;
use crate::networks::{ActionId, State, STACK_DEPTH};
use crate::socialsim::Frame;

pub use log::{parse_log, read_log, write_log, LogMeta, LOG_VERSION};

/// Frame indices per transition: the state's eight plus the newest frame of
/// the next state.
pub const SPAN: usize = STACK_DEPTH + 1;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("replay memory is empty")]
    Empty,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {reason}")]
    Corrupt {
        file: &'static str,
        line: usize,
        reason: String,
    },
}

/// Append-only frame store addressed by a global index; the oldest frames
/// can be dropped once nothing refers to them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrameArena {
    base: u64,
    frames: VecDeque<Frame>,
}

impl FrameArena {
    pub fn from_parts(base: u64, frames: Vec<Frame>) -> Self {
        Self {
            base,
            frames: frames.into(),
        }
    }

    pub fn push(&mut self, frame: Frame) -> u64 {
        self.frames.push_back(frame);
        self.end() - 1
    }

    /// Index of the oldest retained frame.
    pub fn base(&self) -> u64 {
        self.base
    }

    /// One past the newest index.
    pub fn end(&self) -> u64 {
        self.base + self.frames.len() as u64
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn get(&self, index: u64) -> Option<&Frame> {
        index
            .checked_sub(self.base)
            .and_then(|i| self.frames.get(i as usize))
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.frames.iter()
    }

    /// Drops every frame older than `index`.
    pub fn release_before(&mut self, index: u64) {
        while self.base < index && !self.frames.is_empty() {
            self.frames.pop_front();
            self.base += 1;
        }
    }
}

/// One interaction step as stored: frames are referenced by arena index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoredTransition {
    pub episode: u64,
    pub step: u64,
    pub action: ActionId,
    pub next_events: EventVector,
    pub terminal: bool,
    pub grayscale: [u64; SPAN],
    pub depth: [u64; SPAN],
}

impl StoredTransition {
    fn oldest_frames(&self) -> (u64, u64) {
        (
            *self.grayscale.iter().min().expect("non-empty"),
            *self.depth.iter().min().expect("non-empty"),
        )
    }
}

/// A transition with its states materialized as tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: State,
    pub action: ActionId,
    pub next_events: EventVector,
    pub next_state: State,
    pub terminal: bool,
    pub episode: u64,
    pub step: u64,
}

/// Frame indices of the current state while an episode is being recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackCursor {
    grayscale: [u64; STACK_DEPTH],
    depth: [u64; STACK_DEPTH],
}

/// Capacity-bounded FIFO of transitions plus the frames they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayMemory {
    capacity: usize,
    transitions: VecDeque<StoredTransition>,
    grayscale: FrameArena,
    depth: FrameArena,
    inserted: u64,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            transitions: VecDeque::new(),
            grayscale: FrameArena::default(),
            depth: FrameArena::default(),
            inserted: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Transitions stored since creation, evicted ones included.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn get(&self, position: usize) -> Option<&StoredTransition> {
        self.transitions.get(position)
    }

    pub fn iter(&self) -> impl Iterator<Item = &StoredTransition> {
        self.transitions.iter()
    }

    pub fn grayscale_frames(&self) -> &FrameArena {
        &self.grayscale
    }

    pub fn depth_frames(&self) -> &FrameArena {
        &self.depth
    }

    /// Appends `t`, evicting the oldest transition when full, and releases
    /// frames nothing refers to any more.
    pub fn store(&mut self, t: StoredTransition) {
        self.transitions.push_back(t);
        self.inserted += 1;
        if self.transitions.len() > self.capacity {
            self.transitions.pop_front();
            let (g, d) = self.transitions[0].oldest_frames();
            self.grayscale.release_before(g);
            self.depth.release_before(d);
        }
    }

    /// Registers the frame history at the start of an episode. Consecutive
    /// identical frames share one arena slot.
    pub fn begin_episode<'a>(
        &mut self,
        grayscale: impl IntoIterator<Item = &'a Frame>,
        depth: impl IntoIterator<Item = &'a Frame>,
    ) -> StackCursor {
        fn intern<'a>(arena: &mut FrameArena, frames: impl IntoIterator<Item = &'a Frame>) -> [u64; STACK_DEPTH] {
            let mut out = [0; STACK_DEPTH];
            let mut n = 0;
            for f in frames {
                assert!(n < STACK_DEPTH, "history longer than a stack");
                let reuse = n > 0 && arena.get(out[n - 1]) == Some(f);
                out[n] = if reuse { out[n - 1] } else { arena.push(f.clone()) };
                n += 1;
            }
            assert_eq!(n, STACK_DEPTH, "history shorter than a stack");
            out
        }
        StackCursor {
            grayscale: intern(&mut self.grayscale, grayscale),
            depth: intern(&mut self.depth, depth),
        }
    }

    /// Stores the transition that produced `next_*` and moves the cursor to
    /// the new state.
    #[allow(clippy::too_many_arguments)]
    pub fn record(
        &mut self,
        cursor: &mut StackCursor,
        episode: u64,
        step: u64,
        action: ActionId,
        next_events: EventVector,
        terminal: bool,
        next_grayscale: Frame,
        next_depth: Frame,
    ) {
        let g = self.grayscale.push(next_grayscale);
        let d = self.depth.push(next_depth);
        let extend = |stack: &[u64; STACK_DEPTH], new: u64| -> [u64; SPAN] {
            std::array::from_fn(|i| if i < STACK_DEPTH { stack[i] } else { new })
        };
        let t = StoredTransition {
            episode,
            step,
            action,
            next_events,
            terminal,
            grayscale: extend(&cursor.grayscale, g),
            depth: extend(&cursor.depth, d),
        };
        cursor.grayscale.rotate_left(1);
        cursor.grayscale[STACK_DEPTH - 1] = g;
        cursor.depth.rotate_left(1);
        cursor.depth[STACK_DEPTH - 1] = d;
        self.store(t);
    }

    fn stack<'a>(&self, arena: &'a FrameArena, indices: &[u64]) -> Vec<&'a Frame> {
        indices
            .iter()
            .map(|&i| arena.get(i).expect("stored transitions reference retained frames"))
            .collect()
    }

    /// State and next state of the transition at `position`.
    pub fn states(&self, position: usize) -> (State, State) {
        let t = &self.transitions[position];
        let g = self.stack(&self.grayscale, &t.grayscale);
        let d = self.stack(&self.depth, &t.depth);
        let state = State::from_frames(g[..STACK_DEPTH].iter().copied(), d[..STACK_DEPTH].iter().copied())
            .expect("consistent frame sizes");
        let next = State::from_frames(g[1..].iter().copied(), d[1..].iter().copied()).expect("consistent frame sizes");
        (state, next)
    }

    pub fn materialize(&self, position: usize) -> Transition {
        let t = &self.transitions[position];
        let (state, next_state) = self.states(position);
        Transition {
            state,
            action: t.action,
            next_events: t.next_events,
            next_state,
            terminal: t.terminal,
            episode: t.episode,
            step: t.step,
        }
    }

    /// Uniform sample without replacement of `min(size, len)` positions.
    pub fn sample_minibuffer<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<Minibuffer, ReplayError> {
        if self.is_empty() {
            return Err(ReplayError::Empty);
        }
        let n = size.min(self.len());
        Ok(Minibuffer {
            positions: rand::seq::index::sample(rng, self.len(), n).into_vec(),
            cursor: 0,
        })
    }
}

/// A sampled subset of memory positions, consumed in batches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minibuffer {
    positions: Vec<usize>,
    cursor: usize,
}

impl Minibuffer {
    pub fn from_positions(positions: Vec<usize>) -> Self {
        Self { positions, cursor: 0 }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.positions.len() - self.cursor
    }

    /// Next unseen batch of up to `batch_size` positions; the last batch may
    /// be partial. `None` once exhausted.
    pub fn next_minibatch(&mut self, batch_size: usize) -> Option<&[usize]> {
        assert!(batch_size > 0, "batch size must be positive");
        if self.cursor >= self.positions.len() {
            return None;
        }
        let end = (self.cursor + batch_size).min(self.positions.len());
        let batch = &self.positions[self.cursor..end];
        self.cursor = end;
        Some(batch)
    }
}
