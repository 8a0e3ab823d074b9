//! Evaluation rollouts and the metrics computed from them: behavior F1 and
//! confusion rates against the oracle, handshake ratio, cumulative reward
//! and predictor accuracy.

mod metrics;
mod report;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use metrics::{
    confusion_metrics, f1_scores, handshake_ratio, pnet_accuracy, ActionRates, Confusion, F1Scores, PnetAccuracy,
};
pub use report::{parse_report, render_report_csv, render_report_txt, MetricsReport, REPORT_HEADER};

use crate::intrinsic::{compute_reward, count_correct, round_predictions, EventVector, RewardContext, RewardFunction};
use crate::networks::{load_pnet, load_qnet, ActionId, Fusion, NetworkError, PNetwork, QNetwork, State, StreamSelection};
use crate::socialsim::{SimConfig, SimError, World};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("an evaluation needs at least one step")]
    NoSteps,
    #[error("no records to score")]
    NoRecords,
    #[error("report.csv line {line}: {reason}")]
    Report { line: usize, reason: String },
}

/// Who picks the actions during an evaluation rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Greedy over both fused streams.
    Model,
    ModelGray,
    ModelDepth,
    Random,
    Oracle,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::Model,
        Policy::ModelGray,
        Policy::ModelDepth,
        Policy::Random,
        Policy::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Model => "model",
            Policy::ModelGray => "model-gray",
            Policy::ModelDepth => "model-depth",
            Policy::Random => "random",
            Policy::Oracle => "oracle",
        }
    }

    pub fn uses_model(self) -> bool {
        matches!(self, Policy::Model | Policy::ModelGray | Policy::ModelDepth)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Policy::ALL.iter().map(|p| p.name()).collect();
                format!("unknown policy `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// A trained predictor and Q network.
#[derive(Debug, Clone)]
pub struct Agent {
    pub pnet: PNetwork,
    pub qnet: QNetwork,
    pub fusion: Fusion,
}

impl Agent {
    /// Loads `pnet.net`, `qnet-gray.net`, `qnet-depth.net` and `targets.net`
    /// from `dir`, checking that they share a preset.
    pub fn load(dir: &Path, fusion: Fusion) -> Result<Self, NetworkError> {
        let pnet = load_pnet(dir)?;
        let qnet = load_qnet(dir)?;
        if pnet.arch() != qnet.arch() {
            return Err(NetworkError::Layout(format!(
                "{}: Pnet preset {} differs from Qnet preset {}",
                dir.display(),
                pnet.arch().name,
                qnet.arch().name
            )));
        }
        Ok(Self { pnet, qnet, fusion })
    }
}

/// One evaluation step.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub state: State,
    pub agent_action: ActionId,
    pub oracle_action: ActionId,
    pub events: EventVector,
    pub reward: f64,
}

const POLICY_STREAM: u64 = 3;

/// Rolls out `policy` for `steps` steps in a world seeded with `seed`.
/// Rewards use `reward`, judged by the agent's predictor when the reward is
/// intrinsic.
pub fn evaluate_policy(
    policy: Policy,
    agent: &mut Agent,
    sim: &SimConfig,
    reward: &RewardFunction,
    seed: u64,
    steps: usize,
) -> Result<Vec<EvalRecord>, EvalError> {
    if steps == 0 {
        return Err(EvalError::NoSteps);
    }
    let config = SimConfig {
        episode_steps: steps,
        ..sim.clone()
    };
    let mut world = World::reset(config, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(POLICY_STREAM);
    let mut records = Vec::with_capacity(steps);
    for _ in 0..steps {
        let state = world.state();
        let oracle = world.oracle_action();
        let action = match policy {
            Policy::Model => agent.qnet.select(&state, agent.fusion, StreamSelection::Both)?,
            Policy::ModelGray => agent.qnet.select(&state, agent.fusion, StreamSelection::GrayscaleOnly)?,
            Policy::ModelDepth => agent.qnet.select(&state, agent.fusion, StreamSelection::DepthOnly)?,
            Policy::Random => ActionId::new(rng.gen_range(0..ActionId::COUNT)).expect("index below COUNT"),
            Policy::Oracle => oracle,
        };
        let events = world.step(action)?.events;
        let count = if reward.uses_predictor() {
            count_correct(round_predictions(&agent.pnet.forward(&state.grayscale, action)?), events)
        } else {
            0
        };
        records.push(EvalRecord {
            reward: compute_reward(reward, count, RewardContext { action, events }),
            state,
            agent_action: action,
            oracle_action: oracle,
            events,
        });
    }
    Ok(records)
}

pub fn cumulative_reward(records: &[EvalRecord]) -> f64 {
    records.iter().map(|r| r.reward).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::Architecture;

    pub(crate) fn agent(seed: u64) -> Agent {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arch = Architecture::desk_small();
        Agent {
            pnet: PNetwork::new(arch.clone(), &mut rng).unwrap(),
            qnet: QNetwork::new(arch, &mut rng).unwrap(),
            fusion: Fusion::MinMax,
        }
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("greedy".parse::<Policy>().is_err());
    }

    #[test]
    fn rollout_lengths_and_oracle_identity() {
        let mut a = agent(1);
        let reward = RewardFunction::preset("neutral").unwrap();
        let sim = SimConfig::default();
        let records = evaluate_policy(Policy::Oracle, &mut a, &sim, &reward, 4, 600).unwrap();
        assert_eq!(records.len(), 600);
        assert!(records.iter().all(|r| r.agent_action == r.oracle_action));
        assert_eq!(f1_scores(&records).unwrap().overall, 1.0);
        assert!(matches!(
            evaluate_policy(Policy::Random, &mut a, &sim, &reward, 4, 0),
            Err(EvalError::NoSteps)
        ));
    }

    #[test]
    fn rollouts_are_deterministic() {
        let reward = RewardFunction::preset("neutral").unwrap();
        let sim = SimConfig::default();
        for policy in [Policy::Random, Policy::Model, Policy::ModelDepth] {
            let a = evaluate_policy(policy, &mut agent(2), &sim, &reward, 9, 50).unwrap();
            let b = evaluate_policy(policy, &mut agent(2), &sim, &reward, 9, 50).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn direct_reward_scores_handshakes() {
        let mut a = agent(3);
        let reward = RewardFunction::Direct;
        let records = evaluate_policy(Policy::Oracle, &mut a, &SimConfig::default(), &reward, 5, 400).unwrap();
        for r in &records {
            let expected = match (r.agent_action == ActionId::HANDSHAKE, r.events.handshake()) {
                (false, _) => 0.0,
                (true, true) => 1.0,
                (true, false) => -0.1,
            };
            assert_eq!(r.reward, expected);
        }
    }

    #[test]
    fn oracle_outscores_random_over_seeds() {
        // The direct reward needs no predictor.
        let reward = RewardFunction::Direct;
        let sim = SimConfig::default();
        let mut a = agent(4);
        let (mut oracle, mut random) = (0.0, 0.0);
        for seed in 0..20 {
            oracle += cumulative_reward(&evaluate_policy(Policy::Oracle, &mut a, &sim, &reward, seed, 300).unwrap());
            random += cumulative_reward(&evaluate_policy(Policy::Random, &mut a, &sim, &reward, seed, 300).unwrap());
        }
        assert!(oracle > random, "oracle {oracle} random {random}");
    }
}
