use std::path::Path;

use imrl::evalkit::{parse_report, render_report_txt};
use imrl::networks::{decode_chains, Role};
use imrl::replay::read_log;
use imrl::trainer::RunConfig;

use crate::failure::{io_error, Failure, Kind};
use crate::settings::read_text;
use crate::InspectArgs;

fn checkpoint_file(path: &Path) -> Result<(), Failure> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    let (arch, role, chains) =
        decode_chains(&bytes).map_err(|e| Failure::from(e).context(format!("{}", path.display())))?;
    let params: usize = chains.iter().map(|c| c.param_count()).sum();
    println!(
        "{}: {} checkpoint, preset {}, {} chains, {params} parameters",
        path.display(),
        role.name(),
        arch.name,
        chains.len()
    );
    Ok(())
}

fn checkpoints(dir: &Path) -> Result<(), Failure> {
    for role in Role::ALL {
        checkpoint_file(&dir.join(role.file_name()))?;
    }
    Ok(())
}

fn log(dir: &Path) -> Result<(), Failure> {
    let (meta, memory) = read_log(dir)?;
    let mut actions = [0usize; 4];
    let mut events = [0usize; 3];
    let mut episodes = std::collections::BTreeSet::new();
    for t in memory.iter() {
        actions[t.action.index()] += 1;
        episodes.insert(t.episode);
        for (i, e) in events.iter_mut().enumerate() {
            *e += usize::from(t.next_events.get(i));
        }
    }
    println!(
        "{}: transition log, preset {}, seed {}, {} transitions over {} episodes",
        dir.display(),
        meta.preset,
        meta.seed,
        memory.len(),
        episodes.len()
    );
    println!("  actions W {} LTH {} H {} HS {}", actions[0], actions[1], actions[2], actions[3]);
    println!("  events handshake {} eye_contact {} smile {}", events[0], events[1], events[2]);
    Ok(())
}

fn report(path: &Path) -> Result<(), Failure> {
    let rows = parse_report(&read_text(path)?)
        .map_err(|e| Failure::new(Kind::Corrupt, anyhow::anyhow!("{}: {e}", path.display())))?;
    print!("{}", render_report_txt(&rows));
    Ok(())
}

pub fn run(args: InspectArgs) -> Result<(), Failure> {
    let p = args.path.as_path();
    if !p.exists() {
        return Err(Failure::usage(format!("{} does not exist", p.display())));
    }
    if p.is_file() {
        return match p.extension().and_then(|e| e.to_str()) {
            Some("net") => checkpoint_file(p),
            Some("csv") => report(p),
            Some("cfg") => {
                let config = RunConfig::parse(&read_text(p)?)?;
                print!("{}", config.render());
                Ok(())
            }
            _ => Err(Failure::usage(format!("{}: unrecognized file type", p.display()))),
        };
    }
    if p.join("meta").is_file() {
        return log(p);
    }
    if p.join(Role::Pnet.file_name()).is_file() {
        return checkpoints(p);
    }
    if p.join("checkpoints").is_dir() {
        checkpoints(&p.join("checkpoints"))?;
        if p.join("log").is_dir() {
            log(&p.join("log"))?;
        }
        let metrics = p.join("metrics.csv");
        if metrics.is_file() {
            let text = read_text(&metrics)?;
            let rows = text.lines().count().saturating_sub(1);
            println!("{}: {rows} episodes", metrics.display());
            if let Some(last) = text.lines().skip(1).last() {
                println!("  last {last}");
            }
        }
        if p.join("report.csv").is_file() {
            report(&p.join("report.csv"))?;
        }
        return Ok(());
    }
    Err(Failure::usage(format!(
        "{}: not a run, checkpoint directory, transition log or report",
        p.display()
    )))
}
