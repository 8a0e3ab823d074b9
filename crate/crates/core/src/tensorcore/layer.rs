use rand::Rng;

use super::gemm::{gemm, Strides};
use super::optim::{apply_update, OptimizerSpec};
use super::{Tensor, TensorError};

/// The fixed set of differentiable layer types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    /// Valid-padding 2-D convolution over a `[channels, height, width]` input.
    Conv2d {
        filters: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride: usize,
    },
    /// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
    MaxPool2x2,
    Relu,
    /// Dense layer over the flattened input.
    FullyConnected { inputs: usize, outputs: usize },
    Sigmoid,
}

impl LayerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::Conv2d { .. } => "conv2d",
            LayerKind::MaxPool2x2 => "maxpool2x2",
            LayerKind::Relu => "relu",
            LayerKind::FullyConnected { .. } => "fullyconnected",
            LayerKind::Sigmoid => "sigmoid",
        }
    }

    pub fn has_weights(&self) -> bool {
        matches!(
            self,
            LayerKind::Conv2d { .. } | LayerKind::FullyConnected { .. }
        )
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, TensorError> {
        if input.is_empty() || input.contains(&0) {
            return Err(TensorError::InvalidShape(input.to_vec()));
        }
        match *self {
            LayerKind::Conv2d {
                filters,
                kernel_h,
                kernel_w,
                stride,
            } => {
                if filters == 0 || kernel_h == 0 || kernel_w == 0 || stride == 0 {
                    return Err(TensorError::InvalidParams {
                        layer: self.name(),
                        reason: "filters, kernel and stride must be positive".into(),
                    });
                }
                let [_, h, w] = spatial(self.name(), input)?;
                check_extent(self.name(), "height", h, kernel_h)?;
                check_extent(self.name(), "width", w, kernel_w)?;
                Ok(vec![
                    filters,
                    (h - kernel_h) / stride + 1,
                    (w - kernel_w) / stride + 1,
                ])
            }
            LayerKind::MaxPool2x2 => {
                let [c, h, w] = spatial(self.name(), input)?;
                check_extent(self.name(), "height", h, 2)?;
                check_extent(self.name(), "width", w, 2)?;
                Ok(vec![c, h / 2, w / 2])
            }
            LayerKind::FullyConnected { inputs, outputs } => {
                if inputs == 0 || outputs == 0 {
                    return Err(TensorError::InvalidParams {
                        layer: self.name(),
                        reason: "unit counts must be positive".into(),
                    });
                }
                let flat: usize = input.iter().product();
                if flat != inputs {
                    return Err(TensorError::ShapeMismatch {
                        layer: self.name(),
                        expected: vec![inputs],
                        actual: input.to_vec(),
                    });
                }
                Ok(vec![outputs])
            }
            LayerKind::Relu | LayerKind::Sigmoid => Ok(input.to_vec()),
        }
    }
}

fn spatial(layer: &'static str, input: &[usize]) -> Result<[usize; 3], TensorError> {
    match input {
        &[c, h, w] => Ok([c, h, w]),
        _ => Err(TensorError::Rank {
            layer,
            expected: 3,
            actual: input.to_vec(),
        }),
    }
}

fn check_extent(
    layer: &'static str,
    axis: &'static str,
    extent: usize,
    kernel: usize,
) -> Result<(), TensorError> {
    if extent < kernel {
        return Err(TensorError::KernelTooLarge {
            layer,
            axis,
            extent,
            kernel,
        });
    }
    Ok(())
}

/// A trainable tensor with its gradient and optimizer accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Tensor,
    pub grad: Tensor,
    pub accumulator: Tensor,
}

impl Param {
    fn zeros(shape: &[usize]) -> Self {
        Self {
            value: Tensor::zeros(shape),
            grad: Tensor::zeros(shape),
            accumulator: Tensor::zeros(shape),
        }
    }

    pub fn from_value(value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        let accumulator = Tensor::zeros(value.shape());
        Self {
            value,
            grad,
            accumulator,
        }
    }
}

#[derive(Debug, Clone)]
enum Cache {
    /// im2col matrix, `[channels * kh * kw, out_h * out_w]`.
    Conv(Vec<f64>),
    /// Flat input index of the maximum of each window.
    Pool(Vec<usize>),
    Relu(Vec<f64>),
    Sigmoid(Vec<f64>),
    Fc(Vec<f64>),
}

/// One layer instance bound to a fixed input shape.
///
/// `forward` caches what `backward` needs; `backward` consumes the cache and
/// accumulates parameter gradients until `optimizer_step` applies and clears
/// them.
#[derive(Debug, Clone)]
pub struct Layer {
    kind: LayerKind,
    input_shape: Vec<usize>,
    output_shape: Vec<usize>,
    weights: Option<Param>,
    bias: Option<Param>,
    cache: Option<Cache>,
}

impl PartialEq for Layer {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.input_shape == other.input_shape
            && self.weights == other.weights
            && self.bias == other.bias
    }
}

impl Layer {
    /// Builds a layer with Glorot-uniform weights and zero biases.
    pub fn new<R: Rng + ?Sized>(
        kind: LayerKind,
        input_shape: &[usize],
        rng: &mut R,
    ) -> Result<Self, TensorError> {
        let mut layer = Self::zeroed(kind, input_shape)?;
        if let Some(w) = layer.weights.as_mut() {
            let (fan_in, fan_out) = fans(kind, input_shape);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in w.value.data_mut() {
                *v = rng.gen_range(-bound..=bound);
            }
        }
        Ok(layer)
    }

    /// Builds a layer whose weights and biases are all zero.
    pub fn zeroed(kind: LayerKind, input_shape: &[usize]) -> Result<Self, TensorError> {
        let output_shape = kind.output_shape(input_shape)?;
        let (weights, bias) = match kind {
            LayerKind::Conv2d {
                filters,
                kernel_h,
                kernel_w,
                ..
            } => (
                Some(Param::zeros(&[filters, input_shape[0], kernel_h, kernel_w])),
                Some(Param::zeros(&[filters])),
            ),
            LayerKind::FullyConnected { inputs, outputs } => (
                Some(Param::zeros(&[outputs, inputs])),
                Some(Param::zeros(&[outputs])),
            ),
            _ => (None, None),
        };
        Ok(Self {
            kind,
            input_shape: input_shape.to_vec(),
            output_shape,
            weights,
            bias,
            cache: None,
        })
    }

    /// Reassembles a layer from stored parameters, validating their shapes.
    pub fn from_parts(
        kind: LayerKind,
        input_shape: &[usize],
        weights: Option<Param>,
        bias: Option<Param>,
    ) -> Result<Self, TensorError> {
        let mut layer = Self::zeroed(kind, input_shape)?;
        for (slot, given, what) in [
            (&mut layer.weights, weights, "weights"),
            (&mut layer.bias, bias, "bias"),
        ] {
            match (slot.as_mut(), given) {
                (None, None) => {}
                (Some(expected), Some(p)) => {
                    if p.value.shape() != expected.value.shape()
                        || p.grad.shape() != expected.value.shape()
                        || p.accumulator.shape() != expected.value.shape()
                    {
                        return Err(TensorError::ShapeMismatch {
                            layer: kind.name(),
                            expected: expected.value.shape().to_vec(),
                            actual: p.value.shape().to_vec(),
                        });
                    }
                    *expected = p;
                }
                _ => {
                    return Err(TensorError::InvalidParams {
                        layer: kind.name(),
                        reason: format!("unexpected presence of {what}"),
                    })
                }
            }
        }
        Ok(layer)
    }

    pub fn kind(&self) -> LayerKind {
        self.kind
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    pub fn weights(&self) -> Option<&Param> {
        self.weights.as_ref()
    }

    pub fn bias(&self) -> Option<&Param> {
        self.bias.as_ref()
    }

    /// Weights then bias, for layers that have them.
    pub fn params(&self) -> impl Iterator<Item = &Param> {
        self.weights.iter().chain(self.bias.iter())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }

    pub fn param_count(&self) -> usize {
        self.params().map(|p| p.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.grad.fill(0.0);
        }
    }

    /// Drops any cached forward state.
    pub fn clear_cache(&mut self) {
        self.cache = None;
    }

    /// Branch decisions taken by the last forward pass: relu gates and pool
    /// argmax positions. Empty for layers without branches.
    pub fn branch_pattern(&self) -> Vec<usize> {
        match &self.cache {
            Some(Cache::Relu(input)) => input.iter().map(|&x| usize::from(x > 0.0)).collect(),
            Some(Cache::Pool(argmax)) => argmax.clone(),
            _ => Vec::new(),
        }
    }

    fn check_input(&self, input: &Tensor) -> Result<(), TensorError> {
        let matches = match self.kind {
            LayerKind::FullyConnected { inputs, .. } => input.len() == inputs,
            _ => input.shape() == self.input_shape.as_slice(),
        };
        if !matches {
            return Err(TensorError::ShapeMismatch {
                layer: self.kind.name(),
                expected: self.input_shape.clone(),
                actual: input.shape().to_vec(),
            });
        }
        Ok(())
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor, TensorError> {
        self.check_input(input)?;
        let x = input.data();
        let (out, cache) = match self.kind {
            LayerKind::Conv2d { .. } => {
                let cols = self.im2col(x);
                let out = self.conv_forward(&cols);
                (out, Cache::Conv(cols))
            }
            LayerKind::MaxPool2x2 => {
                let (out, argmax) = self.pool_forward(x);
                (out, Cache::Pool(argmax))
            }
            LayerKind::Relu => (x.iter().map(|&v| v.max(0.0)).collect(), Cache::Relu(x.to_vec())),
            LayerKind::Sigmoid => {
                let out: Vec<f64> = x.iter().map(|&v| sigmoid(v)).collect();
                (out.clone(), Cache::Sigmoid(out))
            }
            LayerKind::FullyConnected { inputs, outputs } => {
                let w = self.weights.as_ref().expect("fc weights");
                let b = self.bias.as_ref().expect("fc bias");
                let mut out = b.value.data().to_vec();
                gemm(
                    outputs,
                    inputs,
                    1,
                    w.value.data(),
                    Strides::row_major(inputs),
                    x,
                    Strides::row_major(1),
                    &mut out,
                    Strides::row_major(1),
                    1.0,
                );
                (out, Cache::Fc(x.to_vec()))
            }
        };
        self.cache = Some(cache);
        Tensor::new(self.output_shape.clone(), out)
    }

    /// Back-propagates `upstream`, accumulating parameter gradients, and
    /// returns the gradient with respect to the forward input.
    pub fn backward(&mut self, upstream: &Tensor) -> Result<Tensor, TensorError> {
        let grad = self
            .backward_impl(upstream, true)?
            .expect("input gradient requested");
        Tensor::new(self.input_shape.clone(), grad)
    }

    /// Like [`Layer::backward`] but skips the input gradient. Used for the
    /// first layer of a network, whose input is data.
    pub fn backward_params(&mut self, upstream: &Tensor) -> Result<(), TensorError> {
        self.backward_impl(upstream, false).map(|_| ())
    }

    fn backward_impl(
        &mut self,
        upstream: &Tensor,
        want_input_grad: bool,
    ) -> Result<Option<Vec<f64>>, TensorError> {
        if upstream.shape() != self.output_shape.as_slice() {
            return Err(TensorError::ShapeMismatch {
                layer: self.kind.name(),
                expected: self.output_shape.clone(),
                actual: upstream.shape().to_vec(),
            });
        }
        let cache = self.cache.take().ok_or(TensorError::NoForward {
            layer: self.kind.name(),
        })?;
        let up = upstream.data();
        let grad = match (self.kind, cache) {
            (LayerKind::Conv2d { .. }, Cache::Conv(cols)) => self.conv_backward(&cols, up, want_input_grad),
            (LayerKind::MaxPool2x2, Cache::Pool(argmax)) => {
                let mut g = vec![0.0; self.input_len()];
                for (o, &i) in argmax.iter().enumerate() {
                    g[i] += up[o];
                }
                Some(g)
            }
            (LayerKind::Relu, Cache::Relu(input)) => Some(
                input
                    .iter()
                    .zip(up)
                    .map(|(&x, &u)| if x > 0.0 { u } else { 0.0 })
                    .collect(),
            ),
            (LayerKind::Sigmoid, Cache::Sigmoid(out)) => Some(
                out.iter()
                    .zip(up)
                    .map(|(&s, &u)| u * s * (1.0 - s))
                    .collect(),
            ),
            (LayerKind::FullyConnected { inputs, outputs }, Cache::Fc(x)) => {
                let w = self.weights.as_mut().expect("fc weights");
                gemm(
                    outputs,
                    1,
                    inputs,
                    up,
                    Strides::row_major(1),
                    &x,
                    Strides::row_major(inputs),
                    w.grad.data_mut(),
                    Strides::row_major(inputs),
                    1.0,
                );
                let b = self.bias.as_mut().expect("fc bias");
                for (g, &u) in b.grad.data_mut().iter_mut().zip(up) {
                    *g += u;
                }
                if want_input_grad {
                    let mut g = vec![0.0; inputs];
                    gemm(
                        inputs,
                        outputs,
                        1,
                        self.weights.as_ref().expect("fc weights").value.data(),
                        Strides { row: 1, col: inputs },
                        up,
                        Strides::row_major(1),
                        &mut g,
                        Strides::row_major(1),
                        0.0,
                    );
                    Some(g)
                } else {
                    None
                }
            }
            _ => unreachable!("cache kind always matches layer kind"),
        };
        Ok(if want_input_grad { grad } else { None })
    }

    pub fn optimizer_step(&mut self, spec: &OptimizerSpec) {
        for p in self.params_mut() {
            apply_update(p, spec);
        }
    }

    fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    fn conv_geometry(&self) -> ConvGeometry {
        let LayerKind::Conv2d {
            filters,
            kernel_h,
            kernel_w,
            stride,
        } = self.kind
        else {
            unreachable!("conv geometry of a non-conv layer")
        };
        ConvGeometry {
            filters,
            channels: self.input_shape[0],
            height: self.input_shape[1],
            width: self.input_shape[2],
            kernel_h,
            kernel_w,
            stride,
            out_h: self.output_shape[1],
            out_w: self.output_shape[2],
        }
    }

    fn im2col(&self, x: &[f64]) -> Vec<f64> {
        let ConvGeometry {
            channels: c,
            height: h,
            width: w,
            kernel_h: kh,
            kernel_w: kw,
            stride: s,
            out_h: oh,
            out_w: ow,
            ..
        } = self.conv_geometry();
        let positions = oh * ow;
        let mut cols = vec![0.0; c * kh * kw * positions];
        for ch in 0..c {
            let plane = &x[ch * h * w..(ch + 1) * h * w];
            for i in 0..kh {
                for j in 0..kw {
                    let row = (ch * kh + i) * kw + j;
                    let dst = &mut cols[row * positions..(row + 1) * positions];
                    for oy in 0..oh {
                        let src = &plane[(oy * s + i) * w + j..];
                        let dst_row = &mut dst[oy * ow..(oy + 1) * ow];
                        for (ox, d) in dst_row.iter_mut().enumerate() {
                            *d = src[ox * s];
                        }
                    }
                }
            }
        }
        cols
    }

    fn conv_forward(&self, cols: &[f64]) -> Vec<f64> {
        let g = self.conv_geometry();
        let (f, rows, positions) = (g.filters, g.rows(), g.positions());
        let bias = self.bias.as_ref().expect("conv bias").value.data();
        let mut out = vec![0.0; f * positions];
        for (k, chunk) in out.chunks_mut(positions).enumerate() {
            chunk.fill(bias[k]);
        }
        gemm(
            f,
            rows,
            positions,
            self.weights.as_ref().expect("conv weights").value.data(),
            Strides::row_major(rows),
            cols,
            Strides::row_major(positions),
            &mut out,
            Strides::row_major(positions),
            1.0,
        );
        out
    }

    fn conv_backward(&mut self, cols: &[f64], up: &[f64], want_input_grad: bool) -> Option<Vec<f64>> {
        let ConvGeometry {
            filters: f,
            channels: c,
            height: h,
            width: w,
            kernel_h: kh,
            kernel_w: kw,
            stride: s,
            out_h: oh,
            out_w: ow,
        } = self.conv_geometry();
        let rows = c * kh * kw;
        let positions = oh * ow;
        {
            let wp = self.weights.as_mut().expect("conv weights");
            gemm(
                f,
                positions,
                rows,
                up,
                Strides::row_major(positions),
                cols,
                Strides { row: 1, col: positions },
                wp.grad.data_mut(),
                Strides::row_major(rows),
                1.0,
            );
        }
        {
            let bp = self.bias.as_mut().expect("conv bias");
            for (k, g) in bp.grad.data_mut().iter_mut().enumerate() {
                *g += up[k * positions..(k + 1) * positions].iter().sum::<f64>();
            }
        }
        if !want_input_grad {
            return None;
        }
        let mut dcols = vec![0.0; rows * positions];
        gemm(
            rows,
            f,
            positions,
            self.weights.as_ref().expect("conv weights").value.data(),
            Strides { row: 1, col: rows },
            up,
            Strides::row_major(positions),
            &mut dcols,
            Strides::row_major(positions),
            0.0,
        );
        let mut dx = vec![0.0; c * h * w];
        for ch in 0..c {
            let plane = &mut dx[ch * h * w..(ch + 1) * h * w];
            for i in 0..kh {
                for j in 0..kw {
                    let row = (ch * kh + i) * kw + j;
                    let src = &dcols[row * positions..(row + 1) * positions];
                    for oy in 0..oh {
                        let base = (oy * s + i) * w + j;
                        for ox in 0..ow {
                            plane[base + ox * s] += src[oy * ow + ox];
                        }
                    }
                }
            }
        }
        Some(dx)
    }

    fn pool_forward(&self, x: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let (c, h, w) = (self.input_shape[0], self.input_shape[1], self.input_shape[2]);
        let (oh, ow) = (h / 2, w / 2);
        let mut out = Vec::with_capacity(c * oh * ow);
        let mut argmax = Vec::with_capacity(c * oh * ow);
        for ch in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = ch * h * w + (2 * oy) * w + 2 * ox;
                    // Row-major scan with strict comparison: ties keep the first index.
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = ch * h * w + (2 * oy + dy) * w + 2 * ox + dx;
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                    out.push(x[best]);
                    argmax.push(best);
                }
            }
        }
        (out, argmax)
    }
}

#[derive(Debug, Clone, Copy)]
struct ConvGeometry {
    filters: usize,
    channels: usize,
    height: usize,
    width: usize,
    kernel_h: usize,
    kernel_w: usize,
    stride: usize,
    out_h: usize,
    out_w: usize,
}

impl ConvGeometry {
    fn rows(&self) -> usize {
        self.channels * self.kernel_h * self.kernel_w
    }

    fn positions(&self) -> usize {
        self.out_h * self.out_w
    }
}

fn fans(kind: LayerKind, input_shape: &[usize]) -> (usize, usize) {
    match kind {
        LayerKind::Conv2d {
            filters,
            kernel_h,
            kernel_w,
            ..
        } => (
            input_shape[0] * kernel_h * kernel_w,
            filters * kernel_h * kernel_w,
        ),
        LayerKind::FullyConnected { inputs, outputs } => (inputs, outputs),
        _ => (1, 1),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
