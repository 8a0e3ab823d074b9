use std::fmt::Write as _;

use imrl::evalkit::{parse_report, render_report_csv, render_report_txt, MetricsReport};

use crate::failure::{Failure, Kind};
use crate::settings::{read_text, write_file};
use crate::ReportArgs;

pub const SUMMARY_HEADER: &str = "reward,policy,rows,cumulative_reward,f1_W,f1_LTH,f1_H,f1_HS,f1_overall,accuracy,handshake_ratio,pnet_all_events";

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn fmt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// One row per (reward preset, policy), in order of first appearance.
pub fn summarize(rows: &[MetricsReport], policy: &str) -> String {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in rows.iter().filter(|r| policy == "all" || r.policy == policy) {
        if !keys.contains(&(r.reward.as_str(), r.policy.as_str())) {
            keys.push((&r.reward, &r.policy));
        }
    }
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for (reward, policy) in keys {
        let group: Vec<&MetricsReport> = rows.iter().filter(|r| r.reward == reward && r.policy == policy).collect();
        let m = |f: fn(&MetricsReport) -> f64| fmt(mean(group.iter().map(|r| f(r))));
        write!(out, "{reward},{policy},{},{}", group.len(), m(|r| r.cumulative_reward)).unwrap();
        for i in 0..4 {
            write!(out, ",{}", fmt(mean(group.iter().map(|r| r.f1[i])))).unwrap();
        }
        writeln!(
            out,
            ",{},{},{},{}",
            m(|r| r.f1_overall),
            m(|r| r.accuracy),
            fmt(mean(group.iter().filter_map(|r| r.handshake_ratio))),
            m(|r| r.pnet_all_events)
        )
        .unwrap();
    }
    out
}

pub fn run(args: ReportArgs) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for dir in &args.runs {
        let path = dir.join("report.csv");
        if !path.is_file() {
            return Err(Failure::usage(format!("{} not found; run `imrl eval` first", path.display())));
        }
        let parsed = parse_report(&read_text(&path)?)
            .map_err(|e| Failure::new(Kind::Corrupt, anyhow::anyhow!("{}: {e}", path.display())))?;
        rows.extend(parsed);
    }
    let summary = summarize(&rows, &args.policy);
    write_file(&args.out.join("merged.csv"), render_report_csv(&rows))?;
    write_file(&args.out.join("summary.csv"), &summary)?;
    let txt = render_report_txt(&rows);
    write_file(&args.out.join("summary.txt"), &txt)?;
    print!("{summary}");
    Ok(())
}
