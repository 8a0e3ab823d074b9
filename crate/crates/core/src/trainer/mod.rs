//! The training loop: epsilon-greedy data generation followed by replayed
//! minibatch learning of the predictor and both Q streams.

mod config;
mod output;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use config::{ConfigError, FieldError, RunConfig, TrainerConfig};
pub use output::{write_run, EpisodeMetrics, METRICS_HEADER};

use crate::intrinsic::{compute_reward, count_correct, round_predictions, RewardContext, RewardFunction};
use crate::networks::{
    bellman_targets, qnet_train_step, ActionId, Modality, NetworkError, PNetwork, PnetSample, QNetwork, State,
    StreamSelection,
};
use crate::replay::{LogMeta, ReplayError, ReplayMemory};
use crate::socialsim::{SimConfig, SimError, World};
use crate::tensorcore::Tensor;

#[derive(Debug, Error)]
pub enum TrainerError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("the learning phase needs at least one stored transition")]
    NoData,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Exploration rate at a global step: linear from `epsilon_start` at step 0
/// to `epsilon_end` at the horizon, constant afterwards.
pub fn epsilon_at(cfg: &TrainerConfig, global_step: u64) -> f64 {
    if global_step >= cfg.epsilon_horizon {
        return cfg.epsilon_end;
    }
    let f = global_step as f64 / cfg.epsilon_horizon as f64;
    let eps = cfg.epsilon_start * (1.0 - f) + cfg.epsilon_end * f;
    eps.clamp(cfg.epsilon_end, cfg.epsilon_start)
}

/// Random streams derived from the run seed.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const INIT_STREAM: u64 = 1;
const EXPLORE_STREAM: u64 = 2;
const REPLAY_STREAM: u64 = 3;
const EPISODE_STREAM: u64 = 4;

/// Freshly initialized predictor and Q network for a run.
pub fn initial_networks(cfg: &TrainerConfig) -> Result<(PNetwork, QNetwork), TrainerError> {
    let mut rng = stream(cfg.seed, INIT_STREAM);
    let arch = cfg.architecture();
    let pnet = PNetwork::new(arch.clone(), &mut rng)?;
    let qnet = QNetwork::new(arch, &mut rng)?;
    Ok((pnet, qnet))
}

/// World seeds of the first `episodes` training episodes.
pub fn episode_seeds(seed: u64, episodes: usize) -> Vec<u64> {
    let mut rng = stream(seed, EPISODE_STREAM);
    (0..episodes).map(|_| rng.gen()).collect()
}

/// What one data generation phase did.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GenerationStats {
    pub steps: u64,
    pub actions: [u64; ActionId::COUNT],
    pub handshakes: u64,
    /// Exploration rate at the last step.
    pub epsilon: f64,
}

/// Runs `env` to the end of its episode with epsilon-greedy actions from
/// `qnet`, storing every transition in `memory`.
pub fn data_generation_phase<R: Rng + ?Sized>(
    env: &mut World,
    memory: &mut ReplayMemory,
    qnet: &mut QNetwork,
    cfg: &TrainerConfig,
    episode: u64,
    first_step: u64,
    rng: &mut R,
) -> Result<GenerationStats, TrainerError> {
    let mut stats = GenerationStats::default();
    let (g, d) = env.history();
    let mut cursor = memory.begin_episode(g, d);
    while !env.is_terminal() {
        let eps = epsilon_at(cfg, first_step + stats.steps);
        let action = if rng.gen::<f64>() < eps {
            ActionId::new(rng.gen_range(0..ActionId::COUNT)).expect("index below COUNT")
        } else {
            qnet.select(&env.state(), cfg.fusion, StreamSelection::Both)?
        };
        let out = env.step(action)?;
        let (g, d) = env.history();
        memory.record(
            &mut cursor,
            episode,
            stats.steps,
            action,
            out.events,
            out.terminal,
            g.back().expect("full history").clone(),
            d.back().expect("full history").clone(),
        );
        stats.steps += 1;
        stats.actions[action.index()] += 1;
        stats.handshakes += u64::from(out.events.handshake());
        stats.epsilon = eps;
    }
    Ok(stats)
}

/// Sums over one learning phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LearningStats {
    pub minibatches: u64,
    pub samples: u64,
    pub bce_sum: f64,
    pub q_loss_sum: [f64; 2],
    pub reward_sum: f64,
    /// How many computed rewards came from each correct-prediction count.
    pub reward_counts: [u64; 4],
}

impl LearningStats {
    fn mean(sum: f64, n: u64) -> f64 {
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    pub fn mean_bce(&self) -> f64 {
        Self::mean(self.bce_sum, self.minibatches)
    }

    pub fn mean_q_loss(&self, m: Modality) -> f64 {
        let i = match m {
            Modality::Grayscale => 0,
            Modality::Depth => 1,
        };
        Self::mean(self.q_loss_sum[i], self.minibatches)
    }

    pub fn mean_reward(&self) -> f64 {
        Self::mean(self.reward_sum, self.samples)
    }
}

/// Rewards for a minibatch under `reward`, and the correct-prediction count
/// behind each.
pub fn minibatch_rewards(
    pnet: &mut PNetwork,
    reward: &RewardFunction,
    grayscale: &[&Tensor],
    actions: &[ActionId],
    events: &[crate::intrinsic::EventVector],
) -> Result<(Vec<f64>, Vec<usize>), TrainerError> {
    let mut rewards = Vec::with_capacity(actions.len());
    let mut counts = Vec::with_capacity(actions.len());
    for ((&g, &action), &e) in grayscale.iter().zip(actions).zip(events) {
        let count = count_correct(round_predictions(&pnet.forward(g, action)?), e);
        rewards.push(compute_reward(reward, count, RewardContext { action, events: e }));
        counts.push(count);
    }
    Ok((rewards, counts))
}

/// `replays` passes, each over a fresh minibuffer. Per minibatch: one Pnet
/// SGD step, rewards from the updated Pnet, Bellman targets from each
/// stream's frozen target, one RMSprop step per stream.
pub fn learning_phase<R: Rng + ?Sized>(
    memory: &ReplayMemory,
    pnet: &mut PNetwork,
    qnet: &mut QNetwork,
    cfg: &TrainerConfig,
    reward: &RewardFunction,
    rng: &mut R,
) -> Result<LearningStats, TrainerError> {
    if memory.is_empty() {
        return Err(TrainerError::NoData);
    }
    let pnet_opt = cfg.pnet_optimizer();
    let qnet_opt = cfg.qnet_optimizer();
    let mut stats = LearningStats::default();
    for _ in 0..cfg.replays {
        let mut buffer = memory.sample_minibuffer(cfg.minibuffer, rng)?;
        while let Some(batch) = buffer.next_minibatch(cfg.minibatch) {
            let states: Vec<(State, State)> = batch.iter().map(|&p| memory.states(p)).collect();
            let stored: Vec<_> = batch.iter().map(|&p| *memory.get(p).expect("sampled position")).collect();
            let actions: Vec<ActionId> = stored.iter().map(|t| t.action).collect();
            let events: Vec<_> = stored.iter().map(|t| t.next_events).collect();
            let terminal: Vec<bool> = stored.iter().map(|t| t.terminal).collect();
            let gray: Vec<&Tensor> = states.iter().map(|(s, _)| &s.grayscale).collect();

            let samples: Vec<PnetSample<'_>> = gray
                .iter()
                .zip(&actions)
                .zip(&events)
                .map(|((&g, &action), &events)| PnetSample {
                    grayscale: g,
                    action,
                    events,
                })
                .collect();
            stats.bce_sum += pnet.train_step(&samples, &pnet_opt)?;

            let (rewards, counts) = minibatch_rewards(pnet, reward, &gray, &actions, &events)?;
            stats.reward_sum += rewards.iter().sum::<f64>();
            for c in counts {
                stats.reward_counts[c] += 1;
            }

            for (i, m) in [Modality::Grayscale, Modality::Depth].into_iter().enumerate() {
                let now: Vec<&Tensor> = states.iter().map(|(s, _)| s.modality(m)).collect();
                let next: Vec<&Tensor> = states.iter().map(|(_, s)| s.modality(m)).collect();
                let q = qnet.stream_mut(m);
                let targets = bellman_targets(&rewards, &next, &terminal, &mut q.target, cfg.gamma)?;
                stats.q_loss_sum[i] += qnet_train_step(&mut q.learning, &now, &actions, &targets, &qnet_opt)?;
            }
            stats.minibatches += 1;
            stats.samples += batch.len() as u64;
        }
    }
    Ok(stats)
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub pnet: PNetwork,
    pub qnet: QNetwork,
    pub memory: ReplayMemory,
    pub log_meta: LogMeta,
    pub metrics: Vec<EpisodeMetrics>,
}

/// Runs the whole algorithm, calling `on_episode` after each episode.
pub fn train(
    run: &RunConfig,
    mut on_episode: impl FnMut(&EpisodeMetrics),
) -> Result<RunArtifacts, TrainerError> {
    let mut run = run.clone();
    run.validate()?;
    let cfg = &run.trainer;
    let reward = cfg.reward_function();
    let sim = SimConfig {
        episode_steps: cfg.steps,
        ..run.sim.clone()
    };
    let (mut pnet, mut qnet) = initial_networks(cfg)?;
    let mut memory = ReplayMemory::new(cfg.capacity);
    let mut explore = stream(cfg.seed, EXPLORE_STREAM);
    let mut replay = stream(cfg.seed, REPLAY_STREAM);
    let mut metrics = Vec::with_capacity(cfg.episodes);
    let mut global_step = 0;
    for (k, world_seed) in episode_seeds(cfg.seed, cfg.episodes).into_iter().enumerate() {
        let mut env = World::reset(sim.clone(), world_seed)?;
        let generation = data_generation_phase(
            &mut env,
            &mut memory,
            &mut qnet,
            cfg,
            k as u64,
            global_step,
            &mut explore,
        )?;
        global_step += generation.steps;
        let learning = learning_phase(&memory, &mut pnet, &mut qnet, cfg, &reward, &mut replay)?;
        if (k + 1) % cfg.sync_interval == 0 {
            qnet.sync_targets();
        }
        let m = EpisodeMetrics::new(k as u64, global_step, &generation, &learning);
        on_episode(&m);
        metrics.push(m);
    }
    Ok(RunArtifacts {
        pnet,
        qnet,
        memory,
        log_meta: LogMeta {
            preset: cfg.arch.clone(),
            seed: cfg.seed,
        },
        metrics,
    })
}
