use std::time::Instant;

use imrl::evalkit::{evaluate_policy, render_report_csv, render_report_txt, Agent, MetricsReport};
use imrl::intrinsic::RewardFunction;
use imrl::trainer::episode_seeds;

use crate::failure::Failure;
use crate::settings::{effective_config, write_file};
use crate::EvalArgs;

pub fn run(args: EvalArgs) -> Result<(), Failure> {
    let own = args.run.join("config.cfg");
    let file = args.config.clone().or_else(|| own.exists().then_some(own));
    let config = effective_config(file.as_deref(), &args.set, None)?;
    let reward_name = args.reward.clone().unwrap_or_else(|| config.trainer.reward.clone());
    let reward = RewardFunction::preset(&reward_name)
        .ok_or_else(|| Failure::usage(format!("unknown reward preset `{reward_name}`")))?;
    if args.steps == 0 {
        return Err(Failure::usage("--steps must be at least 1"));
    }
    let trained = episode_seeds(config.trainer.seed, config.trainer.episodes as usize);
    if let Some(seed) = args.seeds.iter().find(|s| trained.contains(s)) {
        return Err(Failure::usage(format!(
            "evaluation seed {seed} is a training episode seed; pick another"
        )));
    }

    let mut agent = Agent::load(&args.run.join("checkpoints"), config.trainer.fusion)?;
    let started = Instant::now();
    let mut reports = Vec::new();
    for &seed in &args.seeds {
        for &policy in &args.policy {
            let records = evaluate_policy(policy, &mut agent, &config.sim, &reward, seed, args.steps)?;
            reports.push(MetricsReport::from_records(policy, seed, &reward_name, &records, &mut agent.pnet)?);
            eprintln!("  {policy} seed {seed} done [{:.1}s]", started.elapsed().as_secs_f64());
        }
    }

    let out = args.out.unwrap_or(args.run);
    let txt = render_report_txt(&reports);
    write_file(&out.join("report.csv"), render_report_csv(&reports))?;
    write_file(&out.join("report.txt"), &txt)?;
    let policies: Vec<&str> = args.policy.iter().map(|p| p.name()).collect();
    let seeds: Vec<String> = args.seeds.iter().map(u64::to_string).collect();
    let echo = format!(
        "# eval policies {} steps {} seeds {} reward {reward_name}\n{}",
        policies.join(","),
        args.steps,
        seeds.join(","),
        config.render()
    );
    write_file(&out.join("eval.cfg"), echo)?;
    print!("{txt}");
    Ok(())
}
