use std::fmt::Write as _;

use imrl::evalkit::{Agent, Policy};
use imrl::networks::{ActionId, StreamSelection};
use imrl::socialsim::{Frame, SimConfig, World};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::failure::Failure;
use crate::settings::{effective_config, write_file};
use crate::SimulateArgs;

pub const STEPS_HEADER: &str = "step,condition,persons,oracle,agent,handshake,eye_contact,smile";

/// Binary portable graymap.
fn pgm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.pixels());
    out
}

pub fn run(args: SimulateArgs) -> Result<(), Failure> {
    let config = effective_config(args.config.config.as_deref(), &args.config.set, args.seed)?;
    let policy = args
        .policy
        .unwrap_or(if args.run.is_some() { Policy::Model } else { Policy::Oracle });
    let mut agent = match (&args.run, policy.uses_model()) {
        (Some(dir), true) => Some(Agent::load(&dir.join("checkpoints"), config.trainer.fusion)?),
        (None, true) => return Err(Failure::usage(format!("policy {policy} needs --run"))),
        _ => None,
    };
    if args.steps == 0 {
        return Err(Failure::usage("--steps must be at least 1"));
    }
    let seed = config.trainer.seed;
    let sim = SimConfig {
        episode_steps: args.steps,
        ..config.sim.clone()
    };
    let mut world = World::reset(sim, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let mut table = String::from(STEPS_HEADER);
    table.push('\n');
    for step in 0..args.steps {
        let (gray, depth) = world.history();
        let frames = args.out.join("frames");
        write_file(&frames.join(format!("{step:05}-gray.pgm")), pgm(gray.back().expect("eight frames")))?;
        write_file(&frames.join(format!("{step:05}-depth.pgm")), pgm(depth.back().expect("eight frames")))?;
        let oracle = world.oracle_action();
        let action = match (policy, agent.as_mut()) {
            (Policy::Oracle, _) => oracle,
            (Policy::Random, _) => ActionId::new(rng.gen_range(0..ActionId::COUNT)).expect("index below COUNT"),
            (p, Some(a)) => {
                let streams = match p {
                    Policy::ModelGray => StreamSelection::GrayscaleOnly,
                    Policy::ModelDepth => StreamSelection::DepthOnly,
                    _ => StreamSelection::Both,
                };
                a.qnet.select(&world.state(), a.fusion, streams)?
            }
            (_, None) => unreachable!("model policies load an agent"),
        };
        let persons = world.persons().len();
        let outcome = world.step(action)?;
        let e = outcome.events;
        writeln!(
            table,
            "{step},{},{persons},{},{},{},{},{}",
            outcome.condition,
            oracle.label(),
            action.label(),
            u8::from(e.handshake()),
            u8::from(e.eye_contact()),
            u8::from(e.smile())
        )
        .expect("writing to a String");
    }
    write_file(&args.out.join("steps.csv"), table)?;
    write_file(&args.out.join("config.cfg"), config.render())?;
    println!("wrote {} steps to {}", args.steps, args.out.display());
    Ok(())
}
