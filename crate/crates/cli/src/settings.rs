use std::path::Path;

use imrl::trainer::RunConfig;

use crate::failure::{io_error, Failure, Kind};

pub const SEED_VAR: &str = "IMRL_SEED";

/// Splits a `--set key=value` argument.
pub fn parse_pair(arg: &str) -> Result<(String, String), String> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{arg}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

pub fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

/// Builds the effective configuration. Later sources win: built-in
/// defaults, `IMRL_SEED`, the config file, `--set` pairs, then `seed`.
pub fn effective_config(file: Option<&Path>, pairs: &[(String, String)], seed: Option<u64>) -> Result<RunConfig, Failure> {
    let mut config = RunConfig::default();
    if let Ok(value) = std::env::var(SEED_VAR) {
        config.trainer.seed = value
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("{SEED_VAR}: `{value}` is not an unsigned integer")))?;
    }
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::new(Kind::Usage, anyhow::anyhow!("cannot read config {}: {e}", path.display())))?;
        config
            .apply_text(&text)
            .map_err(|e| Failure::from(e).context(format!("in {}", path.display())))?;
    }
    for (key, value) in pairs {
        config
            .set(key, value)
            .map_err(|e| Failure::usage(format!("--set {key}: {}", e.message)))?;
    }
    if let Some(seed) = seed {
        config.trainer.seed = seed;
    }
    config.validate()?;
    Ok(config)
}
