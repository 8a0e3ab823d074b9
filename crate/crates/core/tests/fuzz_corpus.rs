//! Replays the checked-in fuzz corpus through the same entry points the
//! fuzz targets exercise, plus simple mutations of every seed.

use std::path::PathBuf;

use imrl::evalkit::{parse_report, render_report_csv};
use imrl::networks::decode_chains;
use imrl::replay::parse_log;
use imrl::tensorcore::decode_checkpoint;
use imrl::trainer::RunConfig;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            (path.display().to_string(), std::fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

/// The seed itself, every prefix at a few cut points, and single-byte flips.
fn variants(data: &[u8]) -> Vec<Vec<u8>> {
    let mut out = vec![data.to_vec(), Vec::new()];
    let n = data.len();
    for cut in [1, 7, n / 3, n / 2, n.saturating_sub(1)] {
        out.push(data[..cut.min(n)].to_vec());
    }
    for i in (0..n).step_by((n / 64).max(1)) {
        let mut flipped = data.to_vec();
        flipped[i] ^= 0x5a;
        out.push(flipped);
    }
    out
}

fn check_log(data: &[u8]) {
    let mut parts = data.splitn(3, |&b| b == 0);
    let (Some(meta), Some(transitions), Some(frames)) = (parts.next(), parts.next(), parts.next()) else {
        return;
    };
    let (Ok(meta), Ok(transitions)) = (std::str::from_utf8(meta), std::str::from_utf8(transitions)) else {
        return;
    };
    let _ = parse_log(meta, frames, transitions);
}

#[test]
fn checkpoint_seeds() {
    let mut decoded = 0;
    for (name, data) in seeds("checkpoint_decode") {
        for v in variants(&data) {
            if decode_checkpoint(&v).is_ok() {
                decoded += 1;
            }
        }
        if !name.ends_with("truncated") {
            assert!(decode_checkpoint(&data).is_ok(), "{name}");
        }
    }
    assert!(decoded > 0);
}

#[test]
fn chain_seeds() {
    for (name, data) in seeds("decode_chains") {
        for v in variants(&data) {
            let _ = decode_chains(&v);
        }
        if !name.ends_with("truncated") {
            assert!(decode_chains(&data).is_ok(), "{name}");
        }
    }
}

#[test]
fn log_seeds() {
    for (name, data) in seeds("parse_log") {
        for v in variants(&data) {
            check_log(&v);
        }
        if name.ends_with("tiny") {
            let mut parts = data.splitn(3, |&b| b == 0);
            let meta = std::str::from_utf8(parts.next().unwrap()).unwrap();
            let transitions = std::str::from_utf8(parts.next().unwrap()).unwrap();
            let frames = parts.next().unwrap();
            let (_, memory) = parse_log(meta, frames, transitions).unwrap();
            assert!(!memory.is_empty());
        }
    }
}

#[test]
fn config_seeds() {
    for (name, data) in seeds("run_config") {
        for v in variants(&data) {
            let Ok(text) = std::str::from_utf8(&v) else { continue };
            if let Ok(config) = RunConfig::parse(text) {
                let again = RunConfig::parse(&config.render()).expect("rendered config parses");
                assert_eq!(again.render(), config.render());
            }
        }
        let text = String::from_utf8(data).unwrap();
        assert_eq!(RunConfig::parse(&text).is_ok(), !name.ends_with("broken"), "{name}");
    }
}

#[test]
fn report_seeds() {
    for (_, data) in seeds("parse_report") {
        for v in variants(&data) {
            let Ok(text) = std::str::from_utf8(&v) else { continue };
            if let Ok(rows) = parse_report(text) {
                let again = parse_report(&render_report_csv(&rows)).expect("rendered report parses");
                assert_eq!(again, rows);
            }
        }
        assert!(parse_report(std::str::from_utf8(&data).unwrap()).is_ok());
    }
}
