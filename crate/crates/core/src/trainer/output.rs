use std::fmt::Write as _;
use std::path::Path;

use super::{GenerationStats, LearningStats, RunArtifacts, RunConfig, TrainerError};
use crate::networks::{save_pnet, save_qnet, Modality};
use crate::replay::write_log;

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: u64,
    /// Interaction steps taken so far, this episode included.
    pub global_step: u64,
    /// Exploration rate at the episode's last step.
    pub epsilon: f64,
    pub mean_bce: f64,
    pub q_loss_grayscale: f64,
    pub q_loss_depth: f64,
    /// Mean reward computed during learning.
    pub mean_reward: f64,
    /// Learning-phase rewards by correct-prediction count 0..=3.
    pub reward_counts: [u64; 4],
    /// Actions taken during data generation, in W, LTH, H, HS order.
    pub actions: [u64; 4],
    pub handshakes: u64,
}

pub const METRICS_HEADER: &str = "episode,global_step,epsilon,mean_bce,q_loss_grayscale,q_loss_depth,mean_reward,\
reward_count0,reward_count1,reward_count2,reward_count3,actions_W,actions_LTH,actions_H,actions_HS,handshakes";

impl EpisodeMetrics {
    pub fn new(episode: u64, global_step: u64, generation: &GenerationStats, learning: &LearningStats) -> Self {
        Self {
            episode,
            global_step,
            epsilon: generation.epsilon,
            mean_bce: learning.mean_bce(),
            q_loss_grayscale: learning.mean_q_loss(Modality::Grayscale),
            q_loss_depth: learning.mean_q_loss(Modality::Depth),
            mean_reward: learning.mean_reward(),
            reward_counts: learning.reward_counts,
            actions: generation.actions,
            handshakes: generation.handshakes,
        }
    }

    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.episode,
            self.global_step,
            self.epsilon,
            self.mean_bce,
            self.q_loss_grayscale,
            self.q_loss_depth,
            self.mean_reward
        );
        for v in self.reward_counts.iter().chain(&self.actions) {
            write!(row, ",{v}").expect("writing to a String");
        }
        write!(row, ",{}", self.handshakes).expect("writing to a String");
        row
    }
}

impl std::fmt::Display for EpisodeMetrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [w, lth, h, hs] = self.actions;
        write!(
            f,
            "episode {:>3}  step {:>7}  eps {:.3}  bce {:.4}  q {:.4}/{:.4}  reward {:.3}  actions W {w} LTH {lth} H {h} HS {hs}  handshakes {}",
            self.episode,
            self.global_step,
            self.epsilon,
            self.mean_bce,
            self.q_loss_grayscale,
            self.q_loss_depth,
            self.mean_reward,
            self.handshakes
        )
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> TrainerError + '_ {
    move |source| TrainerError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `checkpoints/`, `log/`, `metrics.csv` and the effective
/// `config.cfg` under `out`.
pub fn write_run(out: &Path, run: &RunConfig, artifacts: &RunArtifacts) -> Result<(), TrainerError> {
    let checkpoints = out.join("checkpoints");
    std::fs::create_dir_all(&checkpoints).map_err(io(&checkpoints))?;
    save_pnet(&checkpoints, &artifacts.pnet)?;
    save_qnet(&checkpoints, &artifacts.qnet)?;
    write_log(&out.join("log"), &artifacts.memory, &artifacts.log_meta)?;
    let mut csv = String::from(METRICS_HEADER);
    csv.push('\n');
    for m in &artifacts.metrics {
        csv.push_str(&m.csv_row());
        csv.push('\n');
    }
    let metrics = out.join("metrics.csv");
    std::fs::write(&metrics, csv).map_err(io(&metrics))?;
    let config = out.join("config.cfg");
    std::fs::write(&config, run.render()).map_err(io(&config))?;
    Ok(())
}
