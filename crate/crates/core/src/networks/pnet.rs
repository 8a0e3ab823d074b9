use rand::Rng;

use super::{ActionId, Architecture, EventProbs, NetworkError};
use crate::intrinsic::{EventVector, EVENT_COUNT};
use crate::tensorcore::{ChainBuilder, OptimizerSpec, Sequential, Tensor};

/// Binary cross-entropy averaged over the three events, and its gradient
/// with respect to the predicted probabilities.
pub fn bce_loss(e: EventVector, ehat: &EventProbs) -> (f64, [f64; EVENT_COUNT]) {
    let p = ehat.values();
    let y = e.as_f64();
    let n = EVENT_COUNT as f64;
    let loss = -(0..EVENT_COUNT)
        .map(|i| y[i] * p[i].ln() + (1.0 - y[i]) * (1.0 - p[i]).ln())
        .sum::<f64>()
        / n;
    let grad = std::array::from_fn(|i| (p[i] - y[i]) / (n * p[i] * (1.0 - p[i])));
    (loss, grad)
}

/// One supervised example: the grayscale stack, the action taken and the
/// events that followed.
#[derive(Debug, Clone, Copy)]
pub struct PnetSample<'a> {
    pub grayscale: &'a Tensor,
    pub action: ActionId,
    pub events: EventVector,
}

/// Action-conditional multi-label event predictor.
///
/// The grayscale trunk and the action encoder run side by side; their
/// outputs are concatenated and fed to the head, which ends in a sigmoid per
/// event.
#[derive(Debug, Clone, PartialEq)]
pub struct PNetwork {
    arch: Architecture,
    trunk: Sequential,
    encoder: Sequential,
    head: Sequential,
}

fn check_plan(net: &Sequential, plan: &ChainBuilder, part: &str) -> Result<(), NetworkError> {
    let expected = plan.resolve()?;
    let ok = expected.len() == net.layers().len()
        && expected
            .iter()
            .zip(net.layers())
            .all(|((kind, shape), layer)| layer.kind() == *kind && layer.input_shape() == shape.as_slice());
    if ok {
        Ok(())
    } else {
        Err(NetworkError::Layout(format!("{part} does not match the preset layout")))
    }
}

impl PNetwork {
    pub fn new<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self, NetworkError> {
        let trunk = arch.trunk().build(rng)?;
        let encoder = arch.action_encoder().build(rng)?;
        let head = arch.pnet_head().build(rng)?;
        Ok(Self {
            arch,
            trunk,
            encoder,
            head,
        })
    }

    /// Assembles a network from existing chains, checking them against the
    /// preset layout.
    pub fn from_parts(
        arch: Architecture,
        trunk: Sequential,
        encoder: Sequential,
        head: Sequential,
    ) -> Result<Self, NetworkError> {
        check_plan(&trunk, &arch.trunk(), "pnet trunk")?;
        check_plan(&encoder, &arch.action_encoder(), "pnet action encoder")?;
        check_plan(&head, &arch.pnet_head(), "pnet head")?;
        Ok(Self {
            arch,
            trunk,
            encoder,
            head,
        })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn trunk(&self) -> &Sequential {
        &self.trunk
    }

    pub fn encoder(&self) -> &Sequential {
        &self.encoder
    }

    pub fn head(&self) -> &Sequential {
        &self.head
    }

    /// Trunk, encoder and head, in that order.
    pub fn chains_mut(&mut self) -> [&mut Sequential; 3] {
        [&mut self.trunk, &mut self.encoder, &mut self.head]
    }

    pub fn param_count(&self) -> usize {
        self.trunk.param_count() + self.encoder.param_count() + self.head.param_count()
    }

    pub fn forward(&mut self, grayscale: &Tensor, action: ActionId) -> Result<EventProbs, NetworkError> {
        let t = self.trunk.forward(grayscale)?;
        let e = self.encoder.forward(&Tensor::from_slice(&action.one_hot()))?;
        let mut joined = t.into_data();
        joined.extend_from_slice(e.data());
        let out = self.head.forward(&Tensor::from_slice(&joined))?;
        let d = out.data();
        Ok(EventProbs::new([d[0], d[1], d[2]]))
    }

    /// Forward and backward on one sample, adding `scale` times the BCE
    /// gradient to every parameter gradient. Returns the sample's loss.
    pub fn accumulate(&mut self, sample: PnetSample<'_>, scale: f64) -> Result<f64, NetworkError> {
        let probs = self.forward(sample.grayscale, sample.action)?;
        let (loss, grad) = bce_loss(sample.events, &probs);
        let upstream = Tensor::from_slice(&grad.map(|g| g * scale));
        let g = self.head.backward(&upstream)?;
        let (gt, ge) = g.data().split_at(self.arch.hidden);
        self.trunk.backward_params(&Tensor::from_slice(gt))?;
        self.encoder.backward_params(&Tensor::from_slice(ge))?;
        Ok(loss)
    }

    pub fn zero_grads(&mut self) {
        self.chains_mut().into_iter().for_each(Sequential::zero_grads);
    }

    pub fn optimizer_step(&mut self, spec: &OptimizerSpec) {
        for chain in self.chains_mut() {
            chain.optimizer_step(spec);
        }
    }

    /// One optimizer step on the mean BCE over `samples`. Returns that mean
    /// as measured before the step.
    pub fn train_step(&mut self, samples: &[PnetSample<'_>], spec: &OptimizerSpec) -> Result<f64, NetworkError> {
        if samples.is_empty() {
            return Err(NetworkError::EmptyBatch);
        }
        let scale = 1.0 / samples.len() as f64;
        self.zero_grads();
        let mut total = 0.0;
        for s in samples {
            total += self.accumulate(*s, scale)?;
        }
        self.optimizer_step(spec);
        Ok(total * scale)
    }

    pub fn same_values(&self, other: &PNetwork) -> bool {
        self.trunk.same_values(&other.trunk)
            && self.encoder.same_values(&other.encoder)
            && self.head.same_values(&other.head)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn input(arch: &Architecture, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = arch.input_shape().to_vec();
        let n = shape.iter().product();
        Tensor::new(shape, (0..n).map(|_| rng.gen::<f64>()).collect()).unwrap()
    }

    #[test]
    fn bce_examples() {
        let half = EventProbs::new([0.5; 3]);
        let (l, _) = bce_loss(EventVector::new(true, false, true), &half);
        assert!((l - std::f64::consts::LN_2).abs() < 1e-9);
        let (l, _) = bce_loss(EventVector::new(true, true, true), &EventProbs::new([1.0; 3]));
        assert!(l.abs() < 1e-9);
        let (l, g) = bce_loss(EventVector::new(true, false, false), &EventProbs::new([0.9, 0.1, 0.2]));
        assert!((l - 0.144_622).abs() < 1e-6);
        assert!((g[0] - (-0.1 / (3.0 * 0.09))).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_predict_one_half() {
        let arch = Architecture::desk_small();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = PNetwork::new(arch.clone(), &mut rng).unwrap();
        for chain in net.chains_mut() {
            for layer in chain.layers_mut() {
                for p in layer.params_mut() {
                    p.value.fill(0.0);
                }
            }
        }
        let x = input(&arch, 1);
        assert_eq!(net.forward(&x, ActionId::WAIT).unwrap().values(), [0.5; 3]);
    }

    #[test]
    fn action_path_is_live_and_forward_is_pure() {
        let arch = Architecture::desk();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut net = PNetwork::new(arch.clone(), &mut rng).unwrap();
        let x = input(&arch, 2);
        let a = net.forward(&x, ActionId::WAIT).unwrap();
        let again = net.forward(&x, ActionId::WAIT).unwrap();
        let b = net.forward(&x, ActionId::HANDSHAKE).unwrap();
        assert_eq!(a, again);
        assert_ne!(a, b);
    }

    #[test]
    fn wrong_input_size_is_a_shape_error() {
        let arch = Architecture::desk_small();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = PNetwork::new(arch, &mut rng).unwrap();
        let x = Tensor::zeros(&[8, 16, 16]);
        assert!(matches!(net.forward(&x, ActionId::WAIT), Err(NetworkError::Tensor(_))));
    }

    #[test]
    fn training_reduces_loss_on_fixed_batch() {
        let arch = Architecture::desk_small();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = PNetwork::new(arch.clone(), &mut rng).unwrap();
        let xs: Vec<Tensor> = (0..4).map(|s| input(&arch, s)).collect();
        let samples: Vec<PnetSample> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| PnetSample {
                grayscale: x,
                action: ActionId::new(i).unwrap(),
                events: EventVector::new(i % 2 == 0, true, false),
            })
            .collect();
        let spec = OptimizerSpec::sgd(0.1);
        let first = net.train_step(&samples, &spec).unwrap();
        let mut last = first;
        for _ in 0..30 {
            last = net.train_step(&samples, &spec).unwrap();
        }
        assert!(last < first, "{last} !< {first}");
        assert!(matches!(net.train_step(&[], &spec), Err(NetworkError::EmptyBatch)));
    }
}
