use rand::Rng;

use super::{Layer, LayerKind, OptimizerSpec, Tensor, TensorError};

/// A chain of layers applied in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequential {
    layers: Vec<Layer>,
}

impl Sequential {
    /// Wraps pre-built layers, checking that consecutive shapes agree.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, TensorError> {
        if layers.is_empty() {
            return Err(TensorError::InvalidParams {
                layer: "sequential",
                reason: "no layers".into(),
            });
        }
        for pair in layers.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            let ok = match next.kind() {
                LayerKind::FullyConnected { inputs, .. } => {
                    prev.output_shape().iter().product::<usize>() == inputs
                }
                _ => prev.output_shape() == next.input_shape(),
            };
            if !ok {
                return Err(TensorError::ShapeMismatch {
                    layer: next.kind().name(),
                    expected: next.input_shape().to_vec(),
                    actual: prev.output_shape().to_vec(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn input_shape(&self) -> &[usize] {
        self.layers[0].input_shape()
    }

    pub fn output_shape(&self) -> &[usize] {
        self.layers.last().expect("non-empty").output_shape()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor, TensorError> {
        let mut x = self.layers[0].forward(input)?;
        for layer in &mut self.layers[1..] {
            x = layer.forward(&x)?;
        }
        Ok(x)
    }

    /// Full backward pass returning the gradient w.r.t. the chain input.
    pub fn backward(&mut self, upstream: &Tensor) -> Result<Tensor, TensorError> {
        let mut g = upstream.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    /// Backward pass that only accumulates parameter gradients.
    pub fn backward_params(&mut self, upstream: &Tensor) -> Result<(), TensorError> {
        let (first, rest) = self.layers.split_first_mut().expect("non-empty");
        let mut g = upstream.clone();
        for layer in rest.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        first.backward_params(&g)
    }

    pub fn optimizer_step(&mut self, spec: &OptimizerSpec) {
        for layer in &mut self.layers {
            layer.optimizer_step(spec);
        }
    }

    pub fn zero_grads(&mut self) {
        for layer in &mut self.layers {
            layer.zero_grads();
        }
    }

    pub fn clear_caches(&mut self) {
        for layer in &mut self.layers {
            layer.clear_cache();
        }
    }

    /// Concatenated branch decisions of the last forward pass.
    pub fn branch_pattern(&self) -> Vec<usize> {
        self.layers.iter().flat_map(Layer::branch_pattern).collect()
    }

    /// Copies parameter values (not gradients or optimizer state) from a
    /// shape-identical chain.
    pub fn copy_values_from(&mut self, source: &Sequential) {
        assert_eq!(self.layers.len(), source.layers.len(), "chain length");
        for (dst, src) in self.layers.iter_mut().zip(&source.layers) {
            for (d, s) in dst.params_mut().zip(src.params()) {
                d.value.data_mut().copy_from_slice(s.value.data());
            }
        }
    }

    /// True when every parameter value is bit-identical to `other`'s.
    pub fn same_values(&self, other: &Sequential) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.params().zip(b.params()).all(|(p, q)| {
                    p.value.shape() == q.value.shape()
                        && p
                            .value
                            .data()
                            .iter()
                            .zip(q.value.data())
                            .all(|(x, y)| x.to_bits() == y.to_bits())
                })
            })
    }
}

#[derive(Debug, Clone, Copy)]
enum Plan {
    Kind(LayerKind),
    Fc(usize),
}

/// Builds a [`Sequential`] from an input shape, inferring dense-layer input
/// counts from the running shape.
#[derive(Debug, Clone)]
pub struct ChainBuilder {
    input_shape: Vec<usize>,
    plan: Vec<Plan>,
}

impl ChainBuilder {
    pub fn new(input_shape: &[usize]) -> Self {
        Self {
            input_shape: input_shape.to_vec(),
            plan: Vec::new(),
        }
    }

    pub fn conv(mut self, filters: usize, kernel: usize, stride: usize) -> Self {
        self.plan.push(Plan::Kind(LayerKind::Conv2d {
            filters,
            kernel_h: kernel,
            kernel_w: kernel,
            stride,
        }));
        self
    }

    pub fn pool(mut self) -> Self {
        self.plan.push(Plan::Kind(LayerKind::MaxPool2x2));
        self
    }

    pub fn relu(mut self) -> Self {
        self.plan.push(Plan::Kind(LayerKind::Relu));
        self
    }

    pub fn sigmoid(mut self) -> Self {
        self.plan.push(Plan::Kind(LayerKind::Sigmoid));
        self
    }

    pub fn fc(mut self, outputs: usize) -> Self {
        self.plan.push(Plan::Fc(outputs));
        self
    }

    /// Resolves the plan into concrete kinds with their input shapes.
    pub fn resolve(&self) -> Result<Vec<(LayerKind, Vec<usize>)>, TensorError> {
        let mut shape = self.input_shape.clone();
        let mut out = Vec::with_capacity(self.plan.len());
        for step in &self.plan {
            let kind = match *step {
                Plan::Kind(k) => k,
                Plan::Fc(outputs) => LayerKind::FullyConnected {
                    inputs: shape.iter().product(),
                    outputs,
                },
            };
            let next = kind.output_shape(&shape)?;
            out.push((kind, std::mem::replace(&mut shape, next)));
        }
        Ok(out)
    }

    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Sequential, TensorError> {
        let layers = self
            .resolve()?
            .into_iter()
            .map(|(kind, shape)| Layer::new(kind, &shape, rng))
            .collect::<Result<Vec<_>, _>>()?;
        Sequential::from_layers(layers)
    }
}
