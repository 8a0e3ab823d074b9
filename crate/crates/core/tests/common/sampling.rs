use std::collections::HashSet;

use imrl::intrinsic::EventVector;
use imrl::networks::{ActionId, Architecture, QNetwork};
use imrl::replay::{ReplayMemory, StoredTransition, SPAN};
use imrl::socialsim::{SimConfig, World};
use imrl::trainer::{data_generation_phase, epsilon_at, TrainerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{chi_square_uniform, chi_square_within_3_sigma, Verdict};

/// A memory holding `n` placeholder transitions.
pub fn filled_memory(n: usize) -> ReplayMemory {
    let mut memory = ReplayMemory::new(n);
    for step in 0..n as u64 {
        memory.store(StoredTransition {
            episode: 0,
            step,
            action: ActionId::WAIT,
            next_events: EventVector::NONE,
            terminal: false,
            grayscale: [0; SPAN],
            depth: [0; SPAN],
        });
    }
    memory
}

/// Draws a minibuffer and drains it in minibatches, checking that the
/// batches are disjoint, in range, of full size except possibly the last,
/// and together cover exactly the minibuffer.
pub fn pass_count(len: usize, minibuffer: usize, batch: usize, rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let memory = filled_memory(len);
    let mut mb = memory.sample_minibuffer(minibuffer, rng).map_err(|e| e.to_string())?;
    let expected = minibuffer.min(len);
    let sampled: HashSet<usize> = mb.positions().iter().copied().collect();
    if mb.len() != expected || sampled.len() != expected {
        return Err(format!("minibuffer of {} positions, {} distinct, expected {expected}", mb.len(), sampled.len()));
    }
    let mut seen = HashSet::new();
    let mut batches = 0;
    while let Some(b) = mb.next_minibatch(batch).map(<[usize]>::to_vec) {
        batches += 1;
        let last = mb.remaining() == 0;
        if b.len() != batch && !(last && b.len() < batch) {
            return Err(format!("batch {batches} has {} positions", b.len()));
        }
        for p in b {
            if p >= len || !seen.insert(p) {
                return Err(format!("position {p} out of range or repeated"));
            }
        }
    }
    if seen != sampled {
        return Err("batches do not cover the minibuffer".into());
    }
    if batches != expected.div_ceil(batch) {
        return Err(format!("{batches} batches for {expected} positions of batch {batch}"));
    }
    Ok(batches)
}

pub fn disjoint_cover(configs: usize) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..configs {
        let len = rng.gen_range(1..=3000);
        let minibuffer = rng.gen_range(1..=2500);
        let batch = rng.gen_range(1..=64);
        if let Err(e) = pass_count(len, minibuffer, batch, &mut rng) {
            return Verdict::new(false, format!("config {i} (memory {len}, minibuffer {minibuffer}, batch {batch}): {e}"));
        }
    }
    let batches = pass_count(5000, 2000, 25, &mut rng);
    Verdict::new(
        batches == Ok(80),
        format!("{configs} randomized configurations covered disjointly; 2000/25 gives {batches:?} minibatches"),
    )
}

/// How often each memory position lands in a minibuffer.
pub fn memory_uniformity() -> Verdict {
    let (len, size, draws) = (60, 15, 4000);
    let memory = filled_memory(len);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut counts = vec![0u64; len];
    for _ in 0..draws {
        for &p in memory.sample_minibuffer(size, &mut rng).unwrap().positions() {
            counts[p] += 1;
        }
    }
    let stat = chi_square_uniform(&counts);
    Verdict::new(
        chi_square_within_3_sigma(stat, len - 1),
        format!("memory sampling chi-square {stat:.1} on {} degrees of freedom", len - 1),
    )
}

/// Actions taken by the data generation phase at epsilon 1.
pub fn exploration_uniformity() -> Verdict {
    let cfg = TrainerConfig {
        epsilon_start: 1.0,
        epsilon_end: 1.0,
        arch: "desk_small".into(),
        ..TrainerConfig::default()
    };
    let sim = SimConfig {
        episode_steps: 4000,
        ..SimConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut qnet = QNetwork::new(Architecture::desk_small(), &mut rng).unwrap();
    let mut world = World::reset(sim, 14).unwrap();
    let mut memory = ReplayMemory::new(4000);
    let stats = data_generation_phase(&mut world, &mut memory, &mut qnet, &cfg, 0, 0, &mut rng).unwrap();
    let stat = chi_square_uniform(&stats.actions);
    Verdict::new(
        chi_square_within_3_sigma(stat, ActionId::COUNT - 1),
        format!("epsilon 1 actions {:?}, chi-square {stat:.2} on 3 degrees of freedom", stats.actions),
    )
}

/// Epsilon is exactly `epsilon_start` at step 0 and `epsilon_end` from the
/// horizon on.
pub fn schedule_endpoints() -> Verdict {
    let cfg = TrainerConfig::default();
    let h = cfg.epsilon_horizon;
    let points = [epsilon_at(&cfg, 0), epsilon_at(&cfg, h), epsilon_at(&cfg, h + 1000)];
    Verdict::new(
        points == [1.0, 0.1, 0.1] && cfg.epsilon_start == 1.0 && cfg.epsilon_end == 0.1,
        format!("epsilon at 0, horizon {h} and beyond: {points:?}"),
    )
}
