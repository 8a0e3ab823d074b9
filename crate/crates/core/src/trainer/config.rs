//! Run configuration: trainer hyperparameters plus the scenario, read from a
//! flat `key = value` file.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::intrinsic::RewardFunction;
use crate::networks::{ActionId, Architecture, Fusion};
use crate::socialsim::{Dynamics, EmissionRow, Engagement, SimConfig};
use crate::tensorcore::OptimizerSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    /// Episodes M.
    pub episodes: usize,
    /// Steps per episode T.
    pub steps: usize,
    /// Replay capacity N.
    pub capacity: usize,
    pub minibuffer: usize,
    pub minibatch: usize,
    /// Replays per episode n.
    pub replays: usize,
    /// Target sync interval C, in episodes.
    pub sync_interval: usize,
    pub gamma: f64,
    /// Qnet RMSprop step size, and Pnet's unless `pnet_learning_rate` is set.
    pub learning_rate: f64,
    pub pnet_learning_rate: Option<f64>,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Steps over which epsilon decays linearly.
    pub epsilon_horizon: u64,
    /// Reward preset name.
    pub reward: String,
    /// Architecture preset name.
    pub arch: String,
    pub fusion: Fusion,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            episodes: 14,
            steps: 1000,
            capacity: 50_000,
            minibuffer: 2000,
            minibatch: 25,
            replays: 10,
            sync_interval: 1,
            gamma: 0.9,
            learning_rate: 0.00025,
            pnet_learning_rate: None,
            rmsprop_decay: OptimizerSpec::DEFAULT_DECAY,
            rmsprop_epsilon: OptimizerSpec::DEFAULT_EPSILON,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            epsilon_horizon: 14_000,
            reward: "neutral".into(),
            arch: "desk".into(),
            fusion: Fusion::MinMax,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        let mut check = |ok: bool, field: &str, message: &str| {
            if !ok {
                errors.push(FieldError::new(field, message));
            }
        };
        for (field, v) in [
            ("steps", self.steps),
            ("capacity", self.capacity),
            ("minibuffer", self.minibuffer),
            ("minibatch", self.minibatch),
            ("sync_interval", self.sync_interval),
        ] {
            check(v > 0, field, "must be positive");
        }
        check(self.gamma > 0.0 && self.gamma <= 1.0, "gamma", "must lie in (0, 1]");
        check(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            "learning_rate",
            "must be positive",
        );
        if let Some(lr) = self.pnet_learning_rate {
            check(lr > 0.0 && lr.is_finite(), "pnet_learning_rate", "must be positive");
        }
        check(
            self.rmsprop_decay > 0.0 && self.rmsprop_decay < 1.0,
            "rmsprop_decay",
            "must lie in (0, 1)",
        );
        check(self.rmsprop_epsilon > 0.0, "rmsprop_epsilon", "must be positive");
        check(
            (0.0..=1.0).contains(&self.epsilon_start),
            "epsilon_start",
            "must lie in [0, 1]",
        );
        check(
            (0.0..=self.epsilon_start).contains(&self.epsilon_end),
            "epsilon_end",
            "must lie in [0, epsilon_start]",
        );
        check(
            RewardFunction::preset(&self.reward).is_some(),
            "reward",
            &format!("unknown preset; expected one of {}", RewardFunction::PRESETS.join(", ")),
        );
        check(
            Architecture::by_name(&self.arch).is_some(),
            "arch",
            &format!("unknown preset; expected one of {}", Architecture::NAMES.join(", ")),
        );
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errors))
        }
    }

    pub fn pnet_optimizer(&self) -> OptimizerSpec {
        OptimizerSpec::sgd(self.pnet_learning_rate.unwrap_or(self.learning_rate))
    }

    pub fn qnet_optimizer(&self) -> OptimizerSpec {
        OptimizerSpec {
            rmsprop_decay: self.rmsprop_decay,
            rmsprop_epsilon: self.rmsprop_epsilon,
            ..OptimizerSpec::rmsprop(self.learning_rate)
        }
    }

    /// Panics on an unknown preset; call `validate` first.
    pub fn architecture(&self) -> Architecture {
        Architecture::by_name(&self.arch).expect("validated architecture preset")
    }

    /// Panics on an unknown preset; call `validate` first.
    pub fn reward_function(&self) -> RewardFunction {
        RewardFunction::preset(&self.reward).expect("validated reward preset")
    }
}

/// A problem with one configuration field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: &str, message: &str) -> Self {
        Self {
            line: None,
            field: field.to_string(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", self.0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
pub struct ConfigError(pub Vec<FieldError>);

const DYNAMICS_KEYS: [&str; 17] = [
    "approach_speed",
    "leave_speed",
    "gaze_toward_prob",
    "gaze_spontaneous_prob",
    "gaze_revert_prob",
    "busy_release_prob",
    "busy_onset_prob",
    "invite_prob",
    "leave_after_handshake_prob",
    "linger_leave_prob",
    "stop_near_prob",
    "spawn_looking_prob",
    "spawn_busy_prob",
    "spawn_near_edge",
    "spawn_far_edge",
    "initial_presence_prob",
    "join_prob",
];

fn dynamics_field<'a>(d: &'a mut Dynamics, key: &str) -> Option<&'a mut f64> {
    Some(match key {
        "approach_speed" => &mut d.approach_speed,
        "leave_speed" => &mut d.leave_speed,
        "gaze_toward_prob" => &mut d.gaze_toward_prob,
        "gaze_spontaneous_prob" => &mut d.gaze_spontaneous_prob,
        "gaze_revert_prob" => &mut d.gaze_revert_prob,
        "busy_release_prob" => &mut d.busy_release_prob,
        "busy_onset_prob" => &mut d.busy_onset_prob,
        "invite_prob" => &mut d.invite_prob,
        "leave_after_handshake_prob" => &mut d.leave_after_handshake_prob,
        "linger_leave_prob" => &mut d.linger_leave_prob,
        "stop_near_prob" => &mut d.stop_near_prob,
        "spawn_looking_prob" => &mut d.spawn_looking_prob,
        "spawn_busy_prob" => &mut d.spawn_busy_prob,
        "spawn_near_edge" => &mut d.spawn_near_edge,
        "spawn_far_edge" => &mut d.spawn_far_edge,
        "initial_presence_prob" => &mut d.initial_presence_prob,
        "join_prob" => &mut d.join_prob,
        _ => return None,
    })
}

fn number<T: FromStr>(value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("`{value}` is not a valid number"))
}

fn real(value: &str) -> Result<f64, String> {
    let v: f64 = number(value)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{value}` is not finite"))
    }
}

/// Trainer settings and the scenario they run in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub trainer: TrainerConfig,
    pub sim: SimConfig,
    /// Whether `sim.resolution` was set explicitly; otherwise it follows the
    /// architecture preset.
    resolution_pinned: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trainer: TrainerConfig::default(),
            sim: SimConfig::default(),
            resolution_pinned: false,
        }
    }
}

impl RunConfig {
    /// Parses a config file on top of the defaults. Every problem is
    /// reported, not only the first.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        config.apply_text(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Applies every `key = value` line of `text` on top of the current
    /// values without range checks. All bad lines are reported together.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fail = |field: &str, message: String| {
                errors.push(FieldError {
                    line: Some(i + 1),
                    field: field.to_string(),
                    message,
                })
            };
            let Some((key, value)) = line.split_once('=') else {
                fail(line, "expected `key = value`".into());
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                fail(key, "set more than once".into());
                continue;
            }
            if let Err(e) = self.set(key, value) {
                fail(key, e.message);
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errors))
        }
    }

    /// Sets one key. Unknown keys and unparsable values are errors; range
    /// checks happen in `validate`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), FieldError> {
        self.apply(key, value).map_err(|message| FieldError::new(key, &message))
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        let t = &mut self.trainer;
        match key {
            "episodes" => t.episodes = number(value)?,
            "steps" => t.steps = number(value)?,
            "capacity" => t.capacity = number(value)?,
            "minibuffer" => t.minibuffer = number(value)?,
            "minibatch" => t.minibatch = number(value)?,
            "replays" => t.replays = number(value)?,
            "sync_interval" => t.sync_interval = number(value)?,
            "gamma" => t.gamma = real(value)?,
            "learning_rate" => t.learning_rate = real(value)?,
            "pnet_learning_rate" => t.pnet_learning_rate = Some(real(value)?),
            "rmsprop_decay" => t.rmsprop_decay = real(value)?,
            "rmsprop_epsilon" => t.rmsprop_epsilon = real(value)?,
            "epsilon_start" => t.epsilon_start = real(value)?,
            "epsilon_end" => t.epsilon_end = real(value)?,
            "epsilon_horizon" => t.epsilon_horizon = number(value)?,
            "reward" => t.reward = value.to_string(),
            "arch" => t.arch = value.to_string(),
            "fusion" => t.fusion = value.parse()?,
            "seed" => t.seed = number(value)?,
            "sim.persons_max" => self.sim.persons_max = number(value)?,
            "sim.appear_prob" => self.sim.appear_prob = real(value)?,
            "sim.episode_steps" => self.sim.episode_steps = number(value)?,
            "sim.resolution" => {
                self.sim.resolution = number(value)?;
                self.resolution_pinned = true;
            }
            _ => {
                if let Some(rest) = key.strip_prefix("sim.emission.") {
                    let (condition, action) = rest
                        .split_once('.')
                        .ok_or_else(|| "expected sim.emission.<condition>.<action>".to_string())?;
                    let condition: Engagement = condition.parse()?;
                    let action: ActionId = action.parse()?;
                    let p: Vec<f64> = value.split(',').map(|v| real(v.trim())).collect::<Result<_, _>>()?;
                    let [hs, eye, smile_hs, smile]: [f64; 4] = p
                        .try_into()
                        .map_err(|_| "expected four probabilities: handshake, eye_contact, smile_after_handshake, smile".to_string())?;
                    self.sim
                        .emission
                        .set_row(condition, action, EmissionRow::new(hs, eye, smile_hs, smile));
                } else if let Some(field) = key
                    .strip_prefix("sim.")
                    .and_then(|name| dynamics_field(&mut self.sim.dynamics, name))
                {
                    *field = real(value)?;
                } else {
                    return Err("unknown key".into());
                }
            }
        }
        Ok(())
    }

    /// Checks every field, resolving the frame size from the architecture
    /// unless it was pinned.
    pub fn validate(&mut self) -> Result<(), ConfigError> {
        let mut errors = match self.trainer.validate() {
            Ok(()) => Vec::new(),
            Err(ConfigError(e)) => e,
        };
        if let Some(arch) = Architecture::by_name(&self.trainer.arch) {
            if !self.resolution_pinned {
                self.sim.resolution = arch.resolution;
            } else if self.sim.resolution != arch.resolution {
                errors.push(FieldError::new(
                    "sim.resolution",
                    &format!("the {} preset expects {}", arch.name, arch.resolution),
                ));
            }
        }
        if let Err(message) = self.sim.validate() {
            let field = message
                .split_whitespace()
                .next()
                .unwrap_or("sim")
                .trim_end_matches(':')
                .to_string();
            errors.push(FieldError {
                line: None,
                field,
                message,
            });
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errors))
        }
    }

    /// Every key with its effective value, in a form `parse` reads back.
    pub fn render(&self) -> String {
        let t = &self.trainer;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("episodes", t.episodes.to_string());
        put("steps", t.steps.to_string());
        put("capacity", t.capacity.to_string());
        put("minibuffer", t.minibuffer.to_string());
        put("minibatch", t.minibatch.to_string());
        put("replays", t.replays.to_string());
        put("sync_interval", t.sync_interval.to_string());
        put("gamma", t.gamma.to_string());
        put("learning_rate", t.learning_rate.to_string());
        if let Some(lr) = t.pnet_learning_rate {
            put("pnet_learning_rate", lr.to_string());
        }
        put("rmsprop_decay", t.rmsprop_decay.to_string());
        put("rmsprop_epsilon", t.rmsprop_epsilon.to_string());
        put("epsilon_start", t.epsilon_start.to_string());
        put("epsilon_end", t.epsilon_end.to_string());
        put("epsilon_horizon", t.epsilon_horizon.to_string());
        put("reward", t.reward.clone());
        put("arch", t.arch.clone());
        put("fusion", t.fusion.name().to_string());
        put("seed", t.seed.to_string());
        put("sim.persons_max", self.sim.persons_max.to_string());
        put("sim.appear_prob", self.sim.appear_prob.to_string());
        put("sim.resolution", self.sim.resolution.to_string());
        put("sim.episode_steps", self.sim.episode_steps.to_string());
        let mut dynamics = self.sim.dynamics.clone();
        for key in DYNAMICS_KEYS {
            let v = *dynamics_field(&mut dynamics, key).expect("listed key");
            put(&format!("sim.{key}"), v.to_string());
        }
        for condition in Engagement::ALL {
            for action in ActionId::ALL {
                let p = self.sim.emission.row(condition, action).probabilities();
                put(
                    &format!("sim.emission.{condition}.{action}"),
                    p.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_validate() {
        let mut c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.sim.resolution, 32);
    }

    #[test]
    fn parses_keys_and_comments() {
        let c = RunConfig::parse(
            "# desk run\nepisodes = 3\nseed=7 # trailing\n\nfusion = mean\nsim.appear_prob = 0.2\nsim.invite_prob = 0\nsim.emission.idle.H = 0, 0.1, 0, 0.2\n",
        )
        .unwrap();
        assert_eq!(c.trainer.episodes, 3);
        assert_eq!(c.trainer.seed, 7);
        assert_eq!(c.trainer.fusion, Fusion::Mean);
        assert_eq!(c.sim.appear_prob, 0.2);
        assert_eq!(c.sim.dynamics.invite_prob, 0.0);
        assert_eq!(
            *c.sim.emission.row(Engagement::Idle, ActionId::WAVE_HAND),
            EmissionRow::new(0.0, 0.1, 0.0, 0.2)
        );
    }

    #[test]
    fn reports_every_problem_with_lines() {
        let err = RunConfig::parse("gama = 0.9\nepisodes = many\nseed = 1\nseed = 2\nnonsense\n").unwrap_err();
        let lines: Vec<(Option<usize>, &str)> = err.0.iter().map(|e| (e.line, e.field.as_str())).collect();
        assert_eq!(
            lines,
            vec![
                (Some(1), "gama"),
                (Some(2), "episodes"),
                (Some(4), "seed"),
                (Some(5), "nonsense")
            ]
        );
    }

    #[test]
    fn range_errors_name_fields() {
        let err = RunConfig::parse("gamma = 0\nepsilon_end = 1.5\nminibatch = 0\nreward = generous\n").unwrap_err();
        let fields: Vec<&str> = err.0.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, vec!["minibatch", "gamma", "epsilon_end", "reward"]);
        let err = RunConfig::parse("sim.appear_prob = 2\n").unwrap_err();
        assert_eq!(err.0[0].field, "sim.appear_prob");
    }

    #[test]
    fn resolution_follows_arch_unless_pinned() {
        let c = RunConfig::parse("arch = paper\n").unwrap();
        assert_eq!(c.sim.resolution, 198);
        let err = RunConfig::parse("arch = paper\nsim.resolution = 32\n").unwrap_err();
        assert_eq!(err.0[0].field, "sim.resolution");
    }

    #[test]
    fn emission_rows_are_checked() {
        let err = RunConfig::parse("sim.emission.engaged.W = 0.5,0,0,0\n").unwrap_err();
        assert!(err.to_string().contains("handshake"));
        assert!(RunConfig::parse("sim.emission.engaged.W = 0,0,0\n").is_err());
        assert!(RunConfig::parse("sim.emission.bored.W = 0,0,0,0\n").is_err());
    }

    #[test]
    fn optimizers_follow_config() {
        let mut t = TrainerConfig::default();
        assert_eq!(t.pnet_optimizer(), OptimizerSpec::sgd(0.00025));
        t.pnet_learning_rate = Some(0.01);
        assert_eq!(t.pnet_optimizer(), OptimizerSpec::sgd(0.01));
        assert_eq!(t.qnet_optimizer(), OptimizerSpec::rmsprop(0.00025));
    }

    proptest! {
        #[test]
        fn render_parses_back(
            episodes in 0usize..100,
            seed in any::<u64>(),
            gamma in 0.01f64..1.0,
            lr in 1e-6f64..1.0,
            appear in 0.0f64..1.0,
            invite in 0.0f64..1.0,
            eye in 0.0f64..1.0,
        ) {
            let mut c = RunConfig::default();
            c.trainer.episodes = episodes;
            c.trainer.seed = seed;
            c.trainer.gamma = gamma;
            c.trainer.pnet_learning_rate = Some(lr);
            c.sim.appear_prob = appear;
            c.sim.dynamics.invite_prob = invite;
            c.sim.emission.set_row(Engagement::Passing, ActionId::WAIT, EmissionRow::new(0.0, eye, 0.0, 0.5));
            c.validate().unwrap();
            let back = RunConfig::parse(&c.render()).unwrap();
            prop_assert_eq!(back.trainer, c.trainer);
            prop_assert_eq!(back.sim, c.sim);
        }
    }
}
