use std::time::Instant;

use imrl::trainer::{train, write_run};

use crate::failure::Failure;
use crate::settings::effective_config;
use crate::TrainArgs;

pub fn run(args: TrainArgs) -> Result<(), Failure> {
    let mut pairs = args.config.set;
    for (key, value) in [
        ("episodes", args.episodes.map(|v| v.to_string())),
        ("steps", args.steps.map(|v| v.to_string())),
        ("reward", args.reward),
        ("arch", args.arch),
    ] {
        if let Some(value) = value {
            pairs.push((key.to_string(), value));
        }
    }
    let config = effective_config(args.config.config.as_deref(), &pairs, args.seed)?;
    let started = Instant::now();
    let artifacts = train(&config, |m| {
        println!("{m}");
        eprintln!("  elapsed {:.1}s", started.elapsed().as_secs_f64());
    })?;
    write_run(&args.out, &config, &artifacts)?;
    println!("wrote {}", args.out.display());
    Ok(())
}
