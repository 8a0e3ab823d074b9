use super::layer::Param;
use super::TensorError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    RmsProp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
}

impl OptimizerSpec {
    pub const DEFAULT_DECAY: f64 = 0.95;
    pub const DEFAULT_EPSILON: f64 = 1e-6;

    pub fn sgd(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            learning_rate,
            rmsprop_decay: Self::DEFAULT_DECAY,
            rmsprop_epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn rmsprop(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::RmsProp,
            ..Self::sgd(learning_rate)
        }
    }

    pub fn validate(&self) -> Result<(), TensorError> {
        let bad = |reason: &str| {
            Err(TensorError::InvalidParams {
                layer: "optimizer",
                reason: reason.into(),
            })
        };
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.rmsprop_decay > 0.0 && self.rmsprop_decay < 1.0) {
            return bad("rmsprop decay must lie in (0, 1)");
        }
        if !(self.rmsprop_epsilon > 0.0) {
            return bad("rmsprop epsilon must be positive");
        }
        Ok(())
    }
}

/// Applies one update to `param` from its accumulated gradient, then zeroes
/// the gradient.
pub(crate) fn apply_update(param: &mut Param, spec: &OptimizerSpec) {
    let lr = spec.learning_rate;
    let w = param.value.data_mut();
    let g = param.grad.data_mut();
    match spec.kind {
        OptimizerKind::Sgd => {
            for (w, g) in w.iter_mut().zip(g.iter()) {
                *w -= lr * g;
            }
        }
        OptimizerKind::RmsProp => {
            let rho = spec.rmsprop_decay;
            let eps = spec.rmsprop_epsilon;
            let acc = param.accumulator.data_mut();
            for ((w, g), a) in w.iter_mut().zip(g.iter()).zip(acc.iter_mut()) {
                *a = rho * *a + (1.0 - rho) * g * g;
                *w -= lr * g / (*a + eps).sqrt();
            }
        }
    }
    g.fill(0.0);
}
