use std::collections::BTreeMap;

use imrl::evalkit::{evaluate_policy, handshake_ratio, Agent, Policy};
use imrl::intrinsic::{RewardFunction, EVENT_COUNT, EVENT_NAMES};
use imrl::networks::{ActionId, Architecture, Fusion, PNetwork, QNetwork};
use imrl::socialsim::{oracle_action, Engagement, Gaze, Motion, Person, SimConfig, World};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Verdict;

/// One representative distance per zone.
const DISTANCES: [f64; 3] = [0.8, 2.0, 4.5];

/// Every discretized person: zone x gaze x motion x busy.
pub fn person_grid() -> Vec<Person> {
    let mut out = Vec::new();
    for distance in DISTANCES {
        for gaze in [Gaze::AtRobot, Gaze::Away] {
            for motion in [Motion::Approaching, Motion::Leaving, Motion::Standing] {
                for busy in [false, true] {
                    out.push(Person {
                        distance,
                        lateral: 0.0,
                        gaze,
                        motion,
                        busy,
                        stop_distance: distance.min(1.0),
                    });
                }
            }
        }
    }
    out
}

/// Every ordered scene of up to `max_persons` grid persons.
pub fn scene_grid(max_persons: usize) -> Vec<Vec<Person>> {
    let grid = person_grid();
    let mut scenes = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_persons {
        let next: Vec<Vec<Person>> = layer
            .iter()
            .flat_map(|s: &Vec<Person>| {
                grid.iter().map(move |p| {
                    let mut s = s.clone();
                    s.push(p.clone());
                    s
                })
            })
            .collect();
        scenes.extend(next.iter().cloned());
        layer = next;
    }
    scenes
}

/// The oracle's action fires at least as many events in expectation as any
/// other action, in every grid scene.
pub fn oracle_consistency(sim: &SimConfig) -> Verdict {
    let scenes = scene_grid(sim.persons_max);
    let mut seen = BTreeMap::new();
    for scene in &scenes {
        let condition = Engagement::classify(scene);
        *seen.entry(condition).or_insert(0usize) += 1;
        let oracle = oracle_action(scene);
        let best = sim.emission.row(condition, oracle).expected_fired();
        for action in ActionId::ALL {
            let e = sim.emission.row(condition, action).expected_fired();
            if e > best {
                return Verdict::new(
                    false,
                    format!("{condition} scene {scene:?}: {action} fires {e} events, oracle {oracle} fires {best}"),
                );
            }
        }
    }
    let covered = seen.len() == Engagement::ALL.len();
    Verdict::new(
        covered,
        format!(
            "{} scenes, conditions reached {:?}",
            scenes.len(),
            seen.iter().map(|(c, n)| format!("{c}:{n}")).collect::<Vec<_>>()
        ),
    )
}

/// A grid scene for every condition.
fn representatives() -> BTreeMap<Engagement, Vec<Person>> {
    let mut out = BTreeMap::new();
    for scene in scene_grid(1) {
        out.entry(Engagement::classify(&scene)).or_insert(scene);
    }
    out
}

/// `successes` out of `trials` is within three standard deviations of `p`.
/// Degenerate probabilities must be matched exactly.
pub fn within_3_sigma(successes: u64, trials: u64, p: f64) -> bool {
    let n = trials as f64;
    let sd = (p * (1.0 - p) / n).sqrt();
    (successes as f64 / n - p).abs() <= 3.0 * sd + 1e-12
}

/// Event frequencies from single steps of fresh worlds against the
/// emission table, `trials` steps per (condition, action) cell.
pub fn emission_frequencies(sim: &SimConfig, trials: u64) -> Verdict {
    let mut failures = Vec::new();
    let mut cells = 0;
    for (condition, scene) in representatives() {
        for action in ActionId::ALL {
            let mut fired = [0u64; EVENT_COUNT];
            for seed in 0..trials {
                let mut world = World::with_persons(sim.clone(), scene.clone(), seed).unwrap();
                let out = world.step(action).unwrap();
                assert_eq!(out.condition, condition);
                for (i, f) in fired.iter_mut().enumerate() {
                    *f += u64::from(out.events.get(i));
                }
            }
            cells += 1;
            let p = sim.emission.row(condition, action).marginals();
            for i in 0..EVENT_COUNT {
                if !within_3_sigma(fired[i], trials, p[i]) {
                    failures.push(format!(
                        "{condition}/{action}/{}: {} of {trials} against p = {}",
                        EVENT_NAMES[i], fired[i], p[i]
                    ));
                }
            }
        }
    }
    Verdict::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{cells} cells x {trials} trials within 3 sigma")
        } else {
            failures.join(", ")
        },
    )
}

pub fn untrained_agent() -> Agent {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let arch = Architecture::desk_small();
    Agent {
        pnet: PNetwork::new(arch.clone(), &mut rng).unwrap(),
        qnet: QNetwork::new(arch, &mut rng).unwrap(),
        fusion: Fusion::MinMax,
    }
}

/// Handshake successes per attempt of the oracle over `seeds` rollouts.
pub fn oracle_handshake_ratio(sim: &SimConfig, seeds: u64, steps: usize) -> Verdict {
    let mut agent = untrained_agent();
    let reward = RewardFunction::Direct;
    let (mut tried, mut shook) = (0u64, 0u64);
    for seed in 0..seeds {
        let records = evaluate_policy(Policy::Oracle, &mut agent, sim, &reward, seed, steps).unwrap();
        for r in records.iter().filter(|r| r.agent_action == ActionId::HANDSHAKE) {
            tried += 1;
            shook += u64::from(r.events.handshake());
        }
        assert!(handshake_ratio(&records).is_some() || !records.iter().any(|r| r.agent_action == ActionId::HANDSHAKE));
    }
    let p = sim.emission.row(Engagement::Engaged, ActionId::HANDSHAKE).handshake;
    Verdict::new(
        tried > 0 && within_3_sigma(shook, tried, p),
        format!(
            "oracle shook {shook} of {tried} attempts over {} steps ({:.3}, table {p})",
            seeds as usize * steps,
            shook as f64 / tried.max(1) as f64
        ),
    )
}

pub fn soundness() -> Verdict {
    let sim = SimConfig::default();
    Verdict::all([
        oracle_consistency(&sim),
        emission_frequencies(&sim, 1000),
        oracle_handshake_ratio(&sim, 20, 600),
    ])
}
