//! Central finite differences against backpropagation.
//!
//! A coordinate is skipped when the perturbation flips a relu gate or moves a
//! pool argmax: the loss has a kink there and the difference quotient is
//! meaningless.

use imrl::intrinsic::EventVector;
use imrl::networks::{bce_loss, ActionId, Architecture, PNetwork, PnetSample};
use imrl::tensorcore::{Layer, LayerKind, Sequential, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Verdict;

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Keeps the denominator away from zero for exactly vanishing gradients.
pub const FLOOR: f64 = 1e-8;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

#[derive(Debug, Clone, Default)]
pub struct GradStats {
    pub checked: usize,
    pub skipped: usize,
    pub worst: f64,
    pub worst_at: String,
}

impl GradStats {
    fn record(&mut self, analytic: f64, numeric: f64, at: impl FnOnce() -> String) {
        let e = relative_error(analytic, numeric);
        self.checked += 1;
        if e > self.worst || self.worst_at.is_empty() {
            self.worst = e;
            self.worst_at = format!("{} (analytic {analytic:.3e}, numeric {numeric:.3e})", at());
        }
    }

    pub fn merge(&mut self, other: GradStats) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        if other.worst > self.worst || self.worst_at.is_empty() {
            self.worst = other.worst;
            self.worst_at = other.worst_at;
        }
    }

    pub fn verdict(&self, what: &str) -> Verdict {
        Verdict::new(
            self.checked > 0 && self.worst < TOLERANCE,
            format!(
                "{what}: {} coordinates, {} kinks skipped, worst relative error {:.2e} at {}",
                self.checked, self.skipped, self.worst, self.worst_at
            ),
        )
    }
}

fn uniform(shape: &[usize], lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// Which value a coordinate perturbs: a parameter element or an input element.
#[derive(Debug, Clone, Copy)]
enum Coord {
    Param { chain: usize, layer: usize, param: usize, index: usize },
    Input(usize),
}

fn param_slot<'a>(chains: &'a mut [&mut Sequential], c: Coord) -> &'a mut f64 {
    match c {
        Coord::Param { chain, layer, param, index } => chains[chain].layers_mut()[layer]
            .params_mut()
            .nth(param)
            .expect("parameter exists")
            .value
            .data_mut()
            .get_mut(index)
            .expect("index in range"),
        Coord::Input(_) => unreachable!("inputs are not parameters"),
    }
}

fn param_coords(chains: &[&Sequential], per_tensor: Option<usize>, rng: &mut ChaCha8Rng) -> Vec<Coord> {
    let mut out = Vec::new();
    for (ci, chain) in chains.iter().enumerate() {
        for (li, layer) in chain.layers().iter().enumerate() {
            for (pi, p) in layer.params().enumerate() {
                let n = p.value.len();
                let picks: Vec<usize> = match per_tensor {
                    Some(k) if k < n => rand::seq::index::sample(rng, n, k).into_vec(),
                    _ => (0..n).collect(),
                };
                out.extend(picks.into_iter().map(|index| Coord::Param {
                    chain: ci,
                    layer: li,
                    param: pi,
                    index,
                }));
            }
        }
    }
    out
}

fn analytic_of(chains: &[&Sequential], c: Coord) -> f64 {
    match c {
        Coord::Param { chain, layer, param, index } => {
            chains[chain].layers()[layer].params().nth(param).unwrap().grad.data()[index]
        }
        Coord::Input(_) => unreachable!(),
    }
}

/// Checks one chain under the loss `sum(weights * output)`, over every
/// parameter and input coordinate.
pub fn check_chain(net: &mut Sequential, input: &Tensor, rng: &mut ChaCha8Rng) -> GradStats {
    let out_len: usize = net.output_shape().iter().product();
    let weights: Vec<f64> = (0..out_len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let upstream = Tensor::new(net.output_shape().to_vec(), weights.clone()).unwrap();
    let loss = |net: &mut Sequential, x: &Tensor| -> (f64, Vec<usize>) {
        let y = net.forward(x).unwrap();
        let l = y.data().iter().zip(&weights).map(|(a, b)| a * b).sum();
        (l, net.branch_pattern())
    };

    net.zero_grads();
    let (_, pattern) = loss(net, input);
    let input_grad = net.backward(&upstream).unwrap();

    let mut stats = GradStats::default();
    let coords = param_coords(&[&*net], None, rng);
    for c in coords {
        let analytic = analytic_of(&[&*net], c);
        let orig = *param_slot(&mut [&mut *net], c);
        let eval = |v: f64, net: &mut Sequential| {
            *param_slot(&mut [&mut *net], c) = v;
            loss(net, input)
        };
        let (up, pu) = eval(orig + STEP, net);
        let (down, pd) = eval(orig - STEP, net);
        *param_slot(&mut [&mut *net], c) = orig;
        if pu != pattern || pd != pattern {
            stats.skipped += 1;
            continue;
        }
        stats.record(analytic, (up - down) / (2.0 * STEP), || format!("{c:?}"));
    }
    for i in 0..input.len() {
        let mut x = input.clone();
        x.data_mut()[i] += STEP;
        let (up, pu) = loss(net, &x);
        x.data_mut()[i] -= 2.0 * STEP;
        let (down, pd) = loss(net, &x);
        if pu != pattern || pd != pattern {
            stats.skipped += 1;
            continue;
        }
        stats.record(input_grad.data()[i], (up - down) / (2.0 * STEP), || {
            format!("{:?}", Coord::Input(i))
        });
    }
    stats
}

/// Single layers of every kind plus a small mixed chain.
fn layer_cases() -> Vec<(&'static str, Vec<LayerKind>, Vec<usize>)> {
    let conv = |filters, kernel_h, kernel_w, stride| LayerKind::Conv2d {
        filters,
        kernel_h,
        kernel_w,
        stride,
    };
    vec![
        ("conv2d", vec![conv(3, 3, 3, 2)], vec![2, 9, 9]),
        ("conv2d rectangular", vec![conv(2, 3, 2, 1)], vec![3, 6, 5]),
        ("maxpool2x2", vec![LayerKind::MaxPool2x2], vec![2, 7, 7]),
        ("relu", vec![LayerKind::Relu], vec![3, 4, 4]),
        (
            "fullyconnected",
            vec![LayerKind::FullyConnected { inputs: 10, outputs: 6 }],
            vec![2, 5],
        ),
        ("sigmoid", vec![LayerKind::Sigmoid], vec![7]),
        (
            "mixed chain",
            vec![
                conv(3, 3, 3, 1),
                LayerKind::Relu,
                LayerKind::MaxPool2x2,
                LayerKind::FullyConnected { inputs: 27, outputs: 4 },
                LayerKind::Sigmoid,
            ],
            vec![2, 8, 8],
        ),
    ]
}

fn build(kinds: &[LayerKind], input: &[usize], rng: &mut ChaCha8Rng) -> Sequential {
    let mut shape = input.to_vec();
    let mut layers = Vec::new();
    for &k in kinds {
        let layer = Layer::new(k, &shape, rng).unwrap();
        shape = layer.output_shape().to_vec();
        layers.push(layer);
    }
    Sequential::from_layers(layers).unwrap()
}

/// Every layer kind over `seeds` seeds.
pub fn check_layers(seeds: std::ops::Range<u64>) -> Verdict {
    let mut parts = Vec::new();
    for (name, kinds, shape) in layer_cases() {
        let mut stats = GradStats::default();
        for seed in seeds.clone() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net = build(&kinds, &shape, &mut rng);
            let x = uniform(&shape, -1.0, 1.0, &mut rng);
            stats.merge(check_chain(&mut net, &x, &mut rng));
        }
        parts.push(stats.verdict(name));
    }
    Verdict::all(parts)
}

fn pnet_loss(pnet: &mut PNetwork, x: &Tensor, action: ActionId, events: EventVector) -> (f64, Vec<usize>) {
    let probs = pnet.forward(x, action).unwrap();
    let pattern = [pnet.trunk(), pnet.encoder(), pnet.head()]
        .iter()
        .flat_map(|c| c.branch_pattern())
        .collect();
    (bce_loss(events, &probs).0, pattern)
}

/// The full predictor under BCE, `per_tensor` sampled coordinates from each
/// parameter tensor per seed.
pub fn check_pnet(seeds: std::ops::Range<u64>, per_tensor: usize) -> Verdict {
    let arch = Architecture::desk_small();
    let mut stats = GradStats::default();
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pnet = PNetwork::new(arch.clone(), &mut rng).unwrap();
        let x = uniform(&arch.input_shape(), 0.0, 1.0, &mut rng);
        let action = ActionId::new(rng.gen_range(0..ActionId::COUNT)).unwrap();
        let events = EventVector::new(rng.gen(), rng.gen(), rng.gen());

        pnet.zero_grads();
        let (_, pattern) = pnet_loss(&mut pnet, &x, action, events);
        pnet.accumulate(PnetSample { grayscale: &x, action, events }, 1.0).unwrap();

        let coords = param_coords(&[pnet.trunk(), pnet.encoder(), pnet.head()], Some(per_tensor), &mut rng);
        for c in coords {
            let analytic = analytic_of(&[pnet.trunk(), pnet.encoder(), pnet.head()], c);
            let orig = *param_slot(&mut pnet.chains_mut(), c);
            *param_slot(&mut pnet.chains_mut(), c) = orig + STEP;
            let (up, pu) = pnet_loss(&mut pnet, &x, action, events);
            *param_slot(&mut pnet.chains_mut(), c) = orig - STEP;
            let (down, pd) = pnet_loss(&mut pnet, &x, action, events);
            *param_slot(&mut pnet.chains_mut(), c) = orig;
            if pu != pattern || pd != pattern {
                stats.skipped += 1;
                continue;
            }
            stats.record(analytic, (up - down) / (2.0 * STEP), || format!("seed {seed} {c:?}"));
        }
    }
    stats.verdict("pnet")
}

/// One Q stream under the squared Bellman error of a random action.
pub fn check_qstream(seeds: std::ops::Range<u64>, per_tensor: usize) -> Verdict {
    let arch = Architecture::desk_small();
    let mut stats = GradStats::default();
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = arch.q_stream().build(&mut rng).unwrap();
        let x = uniform(&arch.input_shape(), 0.0, 1.0, &mut rng);
        let action = rng.gen_range(0..ActionId::COUNT);
        let target: f64 = rng.gen_range(-1.0..1.0);
        let loss = |net: &mut Sequential| {
            let q = net.forward(&x).unwrap();
            ((q.data()[action] - target).powi(2), net.branch_pattern())
        };

        net.zero_grads();
        let (_, pattern) = loss(&mut net);
        let q = net.forward(&x).unwrap();
        let mut up = vec![0.0; ActionId::COUNT];
        up[action] = 2.0 * (q.data()[action] - target);
        net.backward_params(&Tensor::from_slice(&up)).unwrap();

        let coords = param_coords(&[&net], Some(per_tensor), &mut rng);
        for c in coords {
            let analytic = analytic_of(&[&net], c);
            let orig = *param_slot(&mut [&mut net], c);
            *param_slot(&mut [&mut net], c) = orig + STEP;
            let (hi, pu) = loss(&mut net);
            *param_slot(&mut [&mut net], c) = orig - STEP;
            let (lo, pd) = loss(&mut net);
            *param_slot(&mut [&mut net], c) = orig;
            if pu != pattern || pd != pattern {
                stats.skipped += 1;
                continue;
            }
            stats.record(analytic, (hi - lo) / (2.0 * STEP), || format!("seed {seed} {c:?}"));
        }
    }
    stats.verdict("qnet stream")
}

/// All gradient checks at the sizes the acceptance run uses.
pub fn check_all() -> Verdict {
    Verdict::all([
        check_layers(0..100),
        check_pnet(0..100, 8),
        check_qstream(0..100, 8),
    ])
}
