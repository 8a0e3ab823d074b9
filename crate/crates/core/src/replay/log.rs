//! Transition log directory:
//!
//! - `meta`: `key value` lines (version, frame size, preset, seed, counts)
//! - `frames.bin`: retained grayscale frames then depth frames, one byte per
//!   pixel, row-major
//! - `transitions.log`: one transition per line, `episode step action
//!   handshake eye_contact smile terminal g0,..,g8 d0,..,d8`, where `g`/`d`
//!   are frame indices; the first eight form the state and the last eight the
//!   next state

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use super::{FrameArena, ReplayError, ReplayMemory, StoredTransition, SPAN};
use crate::intrinsic::EventVector;
use crate::networks::ActionId;
use crate::socialsim::Frame;

pub const LOG_VERSION: &str = "imrl-transition-log v1";
const MAX_SIDE: usize = 4096;
const HEADER: &str = "# episode step action handshake eye_contact smile terminal grayscale depth";

/// Run-level facts stored alongside the transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogMeta {
    pub preset: String,
    pub seed: u64,
}

fn corrupt(file: &'static str, line: usize, reason: impl Into<String>) -> ReplayError {
    ReplayError::Corrupt {
        file,
        line,
        reason: reason.into(),
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ReplayError + '_ {
    move |source| ReplayError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn frame_dims(memory: &ReplayMemory) -> (usize, usize) {
    memory
        .grayscale
        .frames()
        .next()
        .map(|f| (f.height(), f.width()))
        .unwrap_or((0, 0))
}

fn join(indices: &[u64; SPAN]) -> String {
    indices.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

/// Renders the three files' contents.
pub fn render_log(memory: &ReplayMemory, meta: &LogMeta) -> (String, Vec<u8>, String) {
    let (h, w) = frame_dims(memory);
    let mut m = String::new();
    let _ = writeln!(m, "{LOG_VERSION}");
    let _ = writeln!(m, "height {h}");
    let _ = writeln!(m, "width {w}");
    let _ = writeln!(m, "preset {}", meta.preset);
    let _ = writeln!(m, "seed {}", meta.seed);
    let _ = writeln!(m, "capacity {}", memory.capacity);
    let _ = writeln!(m, "inserted {}", memory.inserted);
    let _ = writeln!(m, "transitions {}", memory.len());
    let _ = writeln!(m, "grayscale_base {}", memory.grayscale.base());
    let _ = writeln!(m, "grayscale_frames {}", memory.grayscale.len());
    let _ = writeln!(m, "depth_base {}", memory.depth.base());
    let _ = writeln!(m, "depth_frames {}", memory.depth.len());

    let mut frames = Vec::with_capacity((memory.grayscale.len() + memory.depth.len()) * h * w);
    for f in memory.grayscale.frames().chain(memory.depth.frames()) {
        frames.extend_from_slice(f.pixels());
    }

    let mut t = String::new();
    let _ = writeln!(t, "{HEADER}");
    for r in memory.iter() {
        let [a, b, c] = r.next_events.bits();
        let _ = writeln!(
            t,
            "{} {} {} {a} {b} {c} {} {} {}",
            r.episode,
            r.step,
            r.action,
            u8::from(r.terminal),
            join(&r.grayscale),
            join(&r.depth)
        );
    }
    (m, frames, t)
}

pub fn write_log(dir: &Path, memory: &ReplayMemory, meta: &LogMeta) -> Result<(), ReplayError> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let (m, frames, t) = render_log(memory, meta);
    for (name, bytes) in [
        ("meta", m.as_bytes()),
        ("frames.bin", frames.as_slice()),
        ("transitions.log", t.as_bytes()),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(io(&path))?;
    }
    Ok(())
}

pub fn read_log(dir: &Path) -> Result<(LogMeta, ReplayMemory), ReplayError> {
    let read = |name: &str| {
        let path = dir.join(name);
        std::fs::read(&path).map_err(io(&path))
    };
    let meta = read("meta")?;
    let frames = read("frames.bin")?;
    let transitions = read("transitions.log")?;
    let meta = String::from_utf8(meta).map_err(|_| corrupt("meta", 0, "not UTF-8"))?;
    let transitions =
        String::from_utf8(transitions).map_err(|_| corrupt("transitions.log", 0, "not UTF-8"))?;
    parse_log(&meta, &frames, &transitions)
}

const META_KEYS: [&str; 11] = [
    "height",
    "width",
    "preset",
    "seed",
    "capacity",
    "inserted",
    "transitions",
    "grayscale_base",
    "grayscale_frames",
    "depth_base",
    "depth_frames",
];

/// Parses the three files' contents back into a memory.
pub fn parse_log(meta: &str, frames: &[u8], transitions: &str) -> Result<(LogMeta, ReplayMemory), ReplayError> {
    let mut lines = meta.lines();
    if lines.next() != Some(LOG_VERSION) {
        return Err(corrupt("meta", 1, format!("expected `{LOG_VERSION}`")));
    }
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let (k, v) = line
            .split_once(' ')
            .ok_or_else(|| corrupt("meta", n, "expected `key value`"))?;
        if !META_KEYS.contains(&k) {
            return Err(corrupt("meta", n, format!("unknown key `{k}`")));
        }
        if fields.insert(k, v).is_some() {
            return Err(corrupt("meta", n, format!("duplicate key `{k}`")));
        }
    }
    let text = |k: &str| fields.get(k).copied().ok_or_else(|| corrupt("meta", 0, format!("missing `{k}`")));
    let num = |k: &str| -> Result<u64, ReplayError> {
        text(k)?
            .parse::<u64>()
            .map_err(|_| corrupt("meta", 0, format!("`{k}` is not a non-negative integer")))
    };
    let size = |k: &str| -> Result<usize, ReplayError> {
        usize::try_from(num(k)?).map_err(|_| corrupt("meta", 0, format!("`{k}` too large")))
    };
    let (h, w) = (size("height")?, size("width")?);
    let capacity = size("capacity")?;
    let count = size("transitions")?;
    let (gn, dn) = (size("grayscale_frames")?, size("depth_frames")?);
    let (gbase, dbase) = (num("grayscale_base")?, num("depth_base")?);
    let inserted = num("inserted")?;
    let meta_out = LogMeta {
        preset: text("preset")?.to_string(),
        seed: num("seed")?,
    };
    if capacity == 0 {
        return Err(corrupt("meta", 0, "capacity must be positive"));
    }
    if count > capacity || (count as u64) > inserted {
        return Err(corrupt("meta", 0, "transition count exceeds capacity or insertions"));
    }
    if gbase.checked_add(gn as u64).is_none() || dbase.checked_add(dn as u64).is_none() {
        return Err(corrupt("meta", 0, "frame index range overflows"));
    }
    let pixels = if gn + dn == 0 {
        if h != 0 || w != 0 {
            return Err(corrupt("meta", 0, "frame size given without frames"));
        }
        0
    } else {
        if h == 0 || w == 0 || h > MAX_SIDE || w > MAX_SIDE {
            return Err(corrupt("meta", 0, format!("frame size {h}x{w} out of range")));
        }
        h * w
    };
    let expected = gn
        .checked_add(dn)
        .and_then(|n| n.checked_mul(pixels))
        .ok_or_else(|| corrupt("meta", 0, "frame count overflows"))?;
    if frames.len() != expected {
        return Err(corrupt(
            "frames.bin",
            0,
            format!("expected {expected} bytes, found {}", frames.len()),
        ));
    }
    let mut chunks = frames.chunks_exact(pixels.max(1));
    let mut take = |n: usize| -> Vec<Frame> {
        (0..n)
            .map(|_| Frame::new(h, w, chunks.next().expect("length checked").to_vec()).expect("dims checked"))
            .collect()
    };
    let grayscale = FrameArena::from_parts(gbase, take(gn));
    let depth = FrameArena::from_parts(dbase, take(dn));

    let mut tl = transitions.lines();
    if tl.next() != Some(HEADER) {
        return Err(corrupt("transitions.log", 1, "missing header line"));
    }
    let mut records = VecDeque::new();
    for (i, line) in tl.enumerate() {
        let n = i + 2;
        if records.len() == count {
            return Err(corrupt("transitions.log", n, "more records than `transitions`"));
        }
        records.push_back(parse_record(line, n, &grayscale, &depth)?);
    }
    if records.len() != count {
        return Err(corrupt(
            "transitions.log",
            0,
            format!("expected {count} records, found {}", records.len()),
        ));
    }
    Ok((
        meta_out,
        ReplayMemory {
            capacity,
            transitions: records,
            grayscale,
            depth,
            inserted,
        },
    ))
}

fn parse_record(
    line: &str,
    n: usize,
    grayscale: &FrameArena,
    depth: &FrameArena,
) -> Result<StoredTransition, ReplayError> {
    let bad = |reason: String| corrupt("transitions.log", n, reason);
    let cols: Vec<&str> = line.split(' ').collect();
    if cols.len() != 9 {
        return Err(bad(format!("expected 9 columns, found {}", cols.len())));
    }
    let int = |s: &str, what: &str| s.parse::<u64>().map_err(|_| bad(format!("bad {what} `{s}`")));
    let bit = |s: &str, what: &str| match s {
        "0" => Ok(0u8),
        "1" => Ok(1u8),
        _ => Err(bad(format!("bad {what} `{s}`"))),
    };
    let action = ActionId::ALL
        .into_iter()
        .find(|a| a.label() == cols[2])
        .ok_or_else(|| bad(format!("bad action `{}`", cols[2])))?;
    let events = EventVector::from_bits([
        bit(cols[3], "handshake bit")?,
        bit(cols[4], "eye contact bit")?,
        bit(cols[5], "smile bit")?,
    ])
    .expect("bits checked");
    let indices = |s: &str, arena: &FrameArena, what: &str| -> Result<[u64; SPAN], ReplayError> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != SPAN {
            return Err(bad(format!("{what}: expected {SPAN} frame indices")));
        }
        let mut out = [0; SPAN];
        for (o, p) in out.iter_mut().zip(parts) {
            *o = int(p, what)?;
            if arena.get(*o).is_none() {
                return Err(bad(format!("{what}: frame {o} not in frames.bin")));
            }
        }
        Ok(out)
    };
    Ok(StoredTransition {
        episode: int(cols[0], "episode")?,
        step: int(cols[1], "step")?,
        action,
        next_events: events,
        terminal: bit(cols[6], "terminal flag")? == 1,
        grayscale: indices(cols[7], grayscale, "grayscale")?,
        depth: indices(cols[8], depth, "depth")?,
    })
}
