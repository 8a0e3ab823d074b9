//! Binary checkpoint format for layer chains.
//!
//! ```text
//! IMRL-NET v1
//! <key> <value>              preamble lines, zero or more
//! layers <count>
//! layer <kind> input=<dims> [params...]
//! weights <dims>             weighted layers only, followed by raw values
//! bias <dims>                followed by raw values
//!                            then weight and bias accumulators, same layout
//! ```
//!
//! Raw values are little-endian IEEE-754 doubles in row-major order.
//! Dimensions are written as `AxBxC`.

use thiserror::Error;

use super::{Layer, LayerKind, Param, Tensor, TensorError};

pub const MAGIC: &str = "IMRL-NET v1";
const MAX_LINE: usize = 1024;
const MAX_LAYERS: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum CheckpointError {
    #[error("not a network checkpoint (missing `{MAGIC}` header)")]
    BadMagic,
    #[error("checkpoint truncated while reading {0}")]
    Truncated(&'static str),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Decoded contents of a checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct NetFile {
    pub preamble: Vec<(String, String)>,
    pub layers: Vec<Layer>,
}

impl NetFile {
    pub fn preamble_value(&self, key: &str) -> Option<&str> {
        self.preamble
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn dims_to_string(dims: &[usize]) -> String {
    dims.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

fn write_values(out: &mut Vec<u8>, t: &Tensor) {
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode(preamble: &[(&str, &str)], layers: &[Layer]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC.as_bytes());
    out.push(b'\n');
    for (k, v) in preamble {
        debug_assert!(!k.contains(char::is_whitespace) && !v.contains('\n'));
        out.extend_from_slice(format!("{k} {v}\n").as_bytes());
    }
    out.extend_from_slice(format!("layers {}\n", layers.len()).as_bytes());
    for layer in layers {
        let mut header = format!(
            "layer {} input={}",
            layer.kind().name(),
            dims_to_string(layer.input_shape())
        );
        match layer.kind() {
            LayerKind::Conv2d {
                filters,
                kernel_h,
                kernel_w,
                stride,
            } => header.push_str(&format!(
                " filters={filters} kernel={kernel_h}x{kernel_w} stride={stride}"
            )),
            LayerKind::FullyConnected { inputs, outputs } => {
                header.push_str(&format!(" inputs={inputs} outputs={outputs}"))
            }
            _ => {}
        }
        header.push('\n');
        out.extend_from_slice(header.as_bytes());
        if let (Some(w), Some(b)) = (layer.weights(), layer.bias()) {
            out.extend_from_slice(format!("weights {}\n", dims_to_string(w.value.shape())).as_bytes());
            write_values(&mut out, &w.value);
            out.extend_from_slice(format!("bias {}\n", dims_to_string(b.value.shape())).as_bytes());
            write_values(&mut out, &b.value);
            write_values(&mut out, &w.accumulator);
            write_values(&mut out, &b.accumulator);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Reader<'a> {
    fn line(&mut self, what: &'static str) -> Result<&'a str, CheckpointError> {
        let rest = &self.bytes[self.pos..];
        let end = rest
            .iter()
            .take(MAX_LINE)
            .position(|&b| b == b'\n')
            .ok_or(CheckpointError::Truncated(what))?;
        self.pos += end + 1;
        self.line += 1;
        std::str::from_utf8(&rest[..end]).map_err(|_| self.malformed("line is not UTF-8"))
    }

    fn values(&mut self, shape: &[usize], what: &'static str) -> Result<Tensor, CheckpointError> {
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| self.malformed("tensor too large"))?;
        let len = n.checked_mul(8).ok_or_else(|| self.malformed("tensor too large"))?;
        if self.bytes.len() - self.pos < len {
            return Err(CheckpointError::Truncated(what));
        }
        let data = self.bytes[self.pos..self.pos + len]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        self.pos += len;
        Ok(Tensor::new(shape.to_vec(), data)?)
    }

    fn malformed(&self, reason: impl Into<String>) -> CheckpointError {
        CheckpointError::Malformed {
            line: self.line,
            reason: reason.into(),
        }
    }
}

fn parse_dims(r: &Reader, s: &str) -> Result<Vec<usize>, CheckpointError> {
    let dims = s
        .split('x')
        .map(|d| d.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| r.malformed(format!("bad dimensions `{s}`")))?;
    if dims.is_empty() || dims.len() > 8 || dims.contains(&0) {
        return Err(r.malformed(format!("bad dimensions `{s}`")));
    }
    Ok(dims)
}

fn parse_usize(r: &Reader, s: &str) -> Result<usize, CheckpointError> {
    s.parse()
        .map_err(|_| r.malformed(format!("expected an integer, got `{s}`")))
}

fn parse_layer(r: &mut Reader) -> Result<Layer, CheckpointError> {
    let header = r.line("layer header")?;
    let mut tokens = header.split(' ');
    if tokens.next() != Some("layer") {
        return Err(r.malformed("expected `layer`"));
    }
    let kind_name = tokens.next().ok_or_else(|| r.malformed("missing layer kind"))?;
    let mut fields = std::collections::BTreeMap::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| r.malformed(format!("expected key=value, got `{tok}`")))?;
        if fields.insert(k, v).is_some() {
            return Err(r.malformed(format!("duplicate field `{k}`")));
        }
    }
    let mut take = |key: &str| {
        fields
            .remove(key)
            .ok_or_else(|| r.malformed(format!("missing field `{key}`")))
    };
    let input = parse_dims(r, take("input")?)?;
    let kind = match kind_name {
        "conv2d" => {
            let filters = parse_usize(r, take("filters")?)?;
            let kernel = parse_dims(r, take("kernel")?)?;
            let stride = parse_usize(r, take("stride")?)?;
            let [kernel_h, kernel_w] = kernel[..] else {
                return Err(r.malformed("kernel must be HxW"));
            };
            LayerKind::Conv2d {
                filters,
                kernel_h,
                kernel_w,
                stride,
            }
        }
        "fullyconnected" => LayerKind::FullyConnected {
            inputs: parse_usize(r, take("inputs")?)?,
            outputs: parse_usize(r, take("outputs")?)?,
        },
        "maxpool2x2" => LayerKind::MaxPool2x2,
        "relu" => LayerKind::Relu,
        "sigmoid" => LayerKind::Sigmoid,
        other => return Err(r.malformed(format!("unknown layer kind `{other}`"))),
    };
    if let Some(extra) = fields.keys().next() {
        return Err(r.malformed(format!("unexpected field `{extra}`")));
    }
    // Validates the shape arithmetic before any parameter is allocated.
    kind.output_shape(&input)?;
    if !kind.has_weights() {
        return Ok(Layer::from_parts(kind, &input, None, None)?);
    }
    let w_shape = tensor_header(r, "weights")?;
    let w = r.values(&w_shape, "weights")?;
    let b_shape = tensor_header(r, "bias")?;
    let b = r.values(&b_shape, "bias")?;
    let w_acc = r.values(&w_shape, "weight accumulators")?;
    let b_acc = r.values(&b_shape, "bias accumulators")?;
    let weights = Param {
        grad: Tensor::zeros(&w_shape),
        value: w,
        accumulator: w_acc,
    };
    let bias = Param {
        grad: Tensor::zeros(&b_shape),
        value: b,
        accumulator: b_acc,
    };
    Ok(Layer::from_parts(kind, &input, Some(weights), Some(bias))?)
}

fn tensor_header(r: &mut Reader, label: &'static str) -> Result<Vec<usize>, CheckpointError> {
    let line = r.line(label)?;
    let dims = line
        .strip_prefix(label)
        .and_then(|s| s.strip_prefix(' '))
        .ok_or_else(|| r.malformed(format!("expected `{label} <dims>`")))?;
    parse_dims(r, dims)
}

pub fn decode(bytes: &[u8]) -> Result<NetFile, CheckpointError> {
    let mut r = Reader {
        bytes,
        pos: 0,
        line: 0,
    };
    if r.line("header").map_err(|_| CheckpointError::BadMagic)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut preamble = Vec::new();
    let count = loop {
        let line = r.line("preamble")?;
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| r.malformed("expected `<key> <value>`"))?;
        if key == "layers" {
            let n = parse_usize(&r, value)?;
            if n > MAX_LAYERS {
                return Err(r.malformed("too many layers"));
            }
            break n;
        }
        if key.is_empty() {
            return Err(r.malformed("empty preamble key"));
        }
        preamble.push((key.to_string(), value.to_string()));
    };
    let layers = (0..count)
        .map(|_| parse_layer(&mut r))
        .collect::<Result<Vec<_>, _>>()?;
    if r.pos != bytes.len() {
        return Err(CheckpointError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(NetFile { preamble, layers })
}
