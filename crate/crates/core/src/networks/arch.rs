use std::fmt;

use crate::tensorcore::ChainBuilder;

use super::{ActionId, STACK_DEPTH};
use crate::intrinsic::EVENT_COUNT;

/// One convolution stage: conv, ReLU, 2x2 max pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvStage {
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
}

/// Layer sizes shared by the Pnet trunk and both Qnet streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub name: &'static str,
    /// Square input side in pixels.
    pub resolution: usize,
    pub stages: Vec<ConvStage>,
    /// Units of the dense layer after the last stage (Qnet FC1, Pnet trunk).
    pub hidden: usize,
    /// Units of the Pnet action encoder.
    pub action_units: usize,
    /// Units of the Pnet layer after the concatenation.
    pub head_hidden: usize,
}

const fn stage(filters: usize, kernel: usize, stride: usize) -> ConvStage {
    ConvStage {
        filters,
        kernel,
        stride,
    }
}

impl Architecture {
    pub const NAMES: [&'static str; 3] = ["paper", "desk", "desk_small"];

    /// Full-size layout on 198x198 inputs, which pool down to 5x5 before FC1.
    pub fn paper() -> Self {
        Self {
            name: "paper",
            resolution: 198,
            stages: vec![stage(16, 9, 3), stage(32, 5, 1), stage(32, 5, 1)],
            hidden: 256,
            action_units: 256,
            head_hidden: 128,
        }
    }

    /// Two-stage layout on 32x32 inputs used for actual training.
    pub fn desk() -> Self {
        Self {
            name: "desk",
            resolution: 32,
            stages: vec![stage(16, 5, 2), stage(32, 3, 1)],
            hidden: 256,
            action_units: 256,
            head_hidden: 128,
        }
    }

    /// The desk layout at reduced width, cheap enough for exhaustive
    /// gradient checks.
    pub fn desk_small() -> Self {
        Self {
            name: "desk_small",
            resolution: 32,
            stages: vec![stage(3, 5, 2), stage(4, 3, 1)],
            hidden: 12,
            action_units: 8,
            head_hidden: 6,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "paper" => Some(Self::paper()),
            "desk" => Some(Self::desk()),
            "desk_small" => Some(Self::desk_small()),
            _ => None,
        }
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [STACK_DEPTH, self.resolution, self.resolution]
    }

    /// Conv stages then a ReLU dense layer of `hidden` units.
    pub fn trunk(&self) -> ChainBuilder {
        let mut b = ChainBuilder::new(&self.input_shape());
        for s in &self.stages {
            b = b.conv(s.filters, s.kernel, s.stride).relu().pool();
        }
        b.fc(self.hidden).relu()
    }

    /// One Qnet stream: the trunk followed by one output per action.
    pub fn q_stream(&self) -> ChainBuilder {
        self.trunk().fc(ActionId::COUNT)
    }

    pub fn action_encoder(&self) -> ChainBuilder {
        ChainBuilder::new(&[ActionId::COUNT]).fc(self.action_units).relu()
    }

    pub fn pnet_head(&self) -> ChainBuilder {
        ChainBuilder::new(&[self.hidden + self.action_units])
            .fc(self.head_hidden)
            .relu()
            .fc(EVENT_COUNT)
            .sigmoid()
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}
