use std::fmt::Write as _;

use super::{
    confusion_metrics, cumulative_reward, f1_scores, handshake_ratio, pnet_accuracy, EvalError, EvalRecord, Policy,
};
use crate::intrinsic::{EVENT_COUNT, EVENT_NAMES};
use crate::networks::{ActionId, PNetwork, PnetSample};

/// Everything measured for one (policy, seed) rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub policy: String,
    pub seed: u64,
    pub steps: usize,
    /// Reward preset the rollout was scored with.
    pub reward: String,
    pub cumulative_reward: f64,
    pub f1: [f64; 4],
    pub f1_overall: f64,
    pub tpr: [Option<f64>; 4],
    pub tnr: [Option<f64>; 4],
    pub fpr: [Option<f64>; 4],
    pub fnr: [Option<f64>; 4],
    pub action_accuracy: [f64; 4],
    pub accuracy: f64,
    pub handshake_ratio: Option<f64>,
    /// Predictor accuracy on this rollout's steps.
    pub pnet_accuracy: [f64; EVENT_COUNT],
    pub pnet_all_events: f64,
    pub majority_baseline: [f64; EVENT_COUNT],
}

impl MetricsReport {
    pub fn from_records(
        policy: Policy,
        seed: u64,
        reward: &str,
        records: &[EvalRecord],
        pnet: &mut PNetwork,
    ) -> Result<Self, EvalError> {
        let f1 = f1_scores(records)?;
        let confusion = confusion_metrics(records)?;
        let samples: Vec<PnetSample<'_>> = records
            .iter()
            .map(|r| PnetSample {
                grayscale: &r.state.grayscale,
                action: r.agent_action,
                events: r.events,
            })
            .collect();
        let pnet = pnet_accuracy(pnet, &samples)?;
        let rates = confusion.per_action;
        Ok(Self {
            policy: policy.name().to_string(),
            seed,
            steps: records.len(),
            reward: reward.to_string(),
            cumulative_reward: cumulative_reward(records),
            f1: f1.per_action,
            f1_overall: f1.overall,
            tpr: rates.map(|r| r.tpr),
            tnr: rates.map(|r| r.tnr),
            fpr: rates.map(|r| r.fpr),
            fnr: rates.map(|r| r.fnr),
            action_accuracy: rates.map(|r| r.accuracy),
            accuracy: confusion.accuracy,
            handshake_ratio: handshake_ratio(records),
            pnet_accuracy: pnet.per_event,
            pnet_all_events: pnet.all_events,
            majority_baseline: pnet.majority_baseline,
        })
    }
}

fn header() -> String {
    let mut cols: Vec<String> = ["policy", "seed", "steps", "reward", "cumulative_reward"]
        .map(String::from)
        .to_vec();
    let labels: Vec<&str> = ActionId::ALL.iter().map(|a| a.label()).collect();
    cols.extend(labels.iter().map(|l| format!("f1_{l}")));
    cols.push("f1_overall".into());
    for rate in ["tpr", "tnr", "fpr", "fnr", "accuracy"] {
        cols.extend(labels.iter().map(|l| format!("{rate}_{l}")));
    }
    cols.push("accuracy".into());
    cols.push("handshake_ratio".into());
    cols.extend(EVENT_NAMES.iter().map(|e| format!("pnet_{e}")));
    cols.push("pnet_all_events".into());
    cols.extend(EVENT_NAMES.iter().map(|e| format!("baseline_{e}")));
    cols.join(",")
}

/// Column names of `report.csv`.
pub static REPORT_HEADER: std::sync::LazyLock<String> = std::sync::LazyLock::new(header);

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn render_report_csv(reports: &[MetricsReport]) -> String {
    let mut out = REPORT_HEADER.clone();
    out.push('\n');
    for r in reports {
        let mut cols = vec![
            r.policy.clone(),
            r.seed.to_string(),
            r.steps.to_string(),
            r.reward.clone(),
            num(r.cumulative_reward),
        ];
        cols.extend(r.f1.map(num));
        cols.push(num(r.f1_overall));
        for rates in [r.tpr, r.tnr, r.fpr, r.fnr] {
            cols.extend(rates.map(opt));
        }
        cols.extend(r.action_accuracy.map(num));
        cols.push(num(r.accuracy));
        cols.push(opt(r.handshake_ratio));
        cols.extend(r.pnet_accuracy.map(num));
        cols.push(num(r.pnet_all_events));
        cols.extend(r.majority_baseline.map(num));
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

struct Fields<'a> {
    line: usize,
    cols: std::str::Split<'a, char>,
}

impl Fields<'_> {
    fn err(&self, reason: impl Into<String>) -> EvalError {
        EvalError::Report {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn text(&mut self) -> Result<String, EvalError> {
        let v = self.cols.next().ok_or_else(|| self.err("too few fields"))?;
        if v.is_empty() {
            return Err(self.err("empty field"));
        }
        Ok(v.to_string())
    }

    fn int<T: std::str::FromStr>(&mut self) -> Result<T, EvalError> {
        let v = self.text()?;
        v.parse().map_err(|_| self.err(format!("`{v}` is not an integer")))
    }

    fn real(&mut self) -> Result<f64, EvalError> {
        let v = self.text()?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(self.err(format!("`{v}` is not a finite number"))),
        }
    }

    fn rate(&mut self) -> Result<f64, EvalError> {
        let v = self.real()?;
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(self.err(format!("rate {v} outside [0, 1]")))
        }
    }

    fn maybe_rate(&mut self) -> Result<Option<f64>, EvalError> {
        let v = self.cols.next().ok_or_else(|| self.err("too few fields"))?;
        if v.is_empty() {
            return Ok(None);
        }
        match v.parse::<f64>() {
            Ok(x) if (0.0..=1.0).contains(&x) => Ok(Some(x)),
            _ => Err(self.err(format!("`{v}` is not a rate"))),
        }
    }

    fn rates<const K: usize>(&mut self) -> Result<[f64; K], EvalError> {
        let mut out = [0.0; K];
        for v in &mut out {
            *v = self.rate()?;
        }
        Ok(out)
    }

    fn maybe_rates(&mut self) -> Result<[Option<f64>; 4], EvalError> {
        let mut out = [None; 4];
        for v in &mut out {
            *v = self.maybe_rate()?;
        }
        Ok(out)
    }
}

/// Reads `report.csv` back. The header must match exactly.
pub fn parse_report(text: &str) -> Result<Vec<MetricsReport>, EvalError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == REPORT_HEADER.as_str() => {}
        _ => {
            return Err(EvalError::Report {
                line: 1,
                reason: "unexpected header".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut f = Fields {
            line: i + 1,
            cols: line.split(','),
        };
        let report = MetricsReport {
            policy: f.text()?,
            seed: f.int()?,
            steps: f.int()?,
            reward: f.text()?,
            cumulative_reward: f.real()?,
            f1: f.rates()?,
            f1_overall: f.rate()?,
            tpr: f.maybe_rates()?,
            tnr: f.maybe_rates()?,
            fpr: f.maybe_rates()?,
            fnr: f.maybe_rates()?,
            action_accuracy: f.rates()?,
            accuracy: f.rate()?,
            handshake_ratio: f.maybe_rate()?,
            pnet_accuracy: f.rates()?,
            pnet_all_events: f.rate()?,
            majority_baseline: f.rates()?,
        };
        if f.cols.next().is_some() {
            return Err(f.err("too many fields"));
        }
        out.push(report);
    }
    Ok(out)
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn by_policy<'a>(reports: &'a [MetricsReport], policy: &'a str) -> impl Iterator<Item = &'a MetricsReport> {
    reports.iter().filter(move |r| r.policy == policy)
}

fn cell(v: Option<f64>, width: usize, digits: usize) -> String {
    match v {
        Some(v) => format!("{v:>width$.digits$}"),
        None => format!("{:>width$}", "-"),
    }
}

/// Human-readable tables: predictor accuracy, cumulative reward, behavior
/// F1 and confusion rates, averaged over seeds per policy.
pub fn render_report_txt(reports: &[MetricsReport]) -> String {
    let mut policies: Vec<&str> = Vec::new();
    for r in reports {
        if !policies.contains(&r.policy.as_str()) {
            policies.push(&r.policy);
        }
    }
    let mut out = String::new();
    let w = &mut out;

    writeln!(w, "Predictor accuracy on evaluation steps (%)").unwrap();
    writeln!(w, "{:<12} {:>10} {:>10} {:>10} {:>10}", "policy", "handshake", "eye", "smile", "all").unwrap();
    for p in &policies {
        let acc: Vec<Option<f64>> = (0..EVENT_COUNT)
            .map(|i| mean(by_policy(reports, p).map(|r| 100.0 * r.pnet_accuracy[i])))
            .collect();
        let all = mean(by_policy(reports, p).map(|r| 100.0 * r.pnet_all_events));
        writeln!(
            w,
            "{:<12} {} {} {} {}",
            p,
            cell(acc[0], 10, 1),
            cell(acc[1], 10, 1),
            cell(acc[2], 10, 1),
            cell(all, 10, 1)
        )
        .unwrap();
        let base: Vec<Option<f64>> = (0..EVENT_COUNT)
            .map(|i| mean(by_policy(reports, p).map(|r| 100.0 * r.majority_baseline[i])))
            .collect();
        writeln!(
            w,
            "{:<12} {} {} {}",
            "  baseline",
            cell(base[0], 10, 1),
            cell(base[1], 10, 1),
            cell(base[2], 10, 1)
        )
        .unwrap();
    }

    writeln!(w, "\nCumulative reward").unwrap();
    writeln!(w, "{:<12} {:>10} {:>10} {:>10}  per seed", "policy", "mean", "min", "max").unwrap();
    for p in &policies {
        let values: Vec<f64> = by_policy(reports, p).map(|r| r.cumulative_reward).collect();
        let min = values.iter().copied().reduce(f64::min);
        let max = values.iter().copied().reduce(f64::max);
        let per_seed: Vec<String> = by_policy(reports, p).map(|r| format!("{}:{:.1}", r.seed, r.cumulative_reward)).collect();
        writeln!(
            w,
            "{:<12} {} {} {}  {}",
            p,
            cell(mean(values.iter().copied()), 10, 1),
            cell(min, 10, 1),
            cell(max, 10, 1),
            per_seed.join(" ")
        )
        .unwrap();
    }

    writeln!(w, "\nBehavior F1 against the oracle").unwrap();
    write!(w, "{:<12}", "policy").unwrap();
    for a in ActionId::ALL {
        write!(w, " {:>8}", a.label()).unwrap();
    }
    writeln!(w, " {:>8} {:>10}", "overall", "hs ratio").unwrap();
    for p in &policies {
        write!(w, "{p:<12}").unwrap();
        for i in 0..4 {
            write!(w, " {}", cell(mean(by_policy(reports, p).map(|r| r.f1[i])), 8, 3)).unwrap();
        }
        writeln!(
            w,
            " {} {}",
            cell(mean(by_policy(reports, p).map(|r| r.f1_overall)), 8, 3),
            cell(mean(by_policy(reports, p).filter_map(|r| r.handshake_ratio)), 10, 3)
        )
        .unwrap();
    }

    writeln!(w, "\nConfusion rates, one action against the rest").unwrap();
    for p in &policies {
        writeln!(
            w,
            "{p}  (overall accuracy {})",
            cell(mean(by_policy(reports, p).map(|r| r.accuracy)), 0, 3)
        )
        .unwrap();
        writeln!(w, "  {:<6} {:>7} {:>7} {:>7} {:>7} {:>7}", "action", "TPR", "TNR", "FPR", "FNR", "Acc").unwrap();
        for a in ActionId::ALL {
            let i = a.index();
            writeln!(
                w,
                "  {:<6} {} {} {} {} {}",
                a.label(),
                cell(mean(by_policy(reports, p).filter_map(|r| r.tpr[i])), 7, 3),
                cell(mean(by_policy(reports, p).filter_map(|r| r.tnr[i])), 7, 3),
                cell(mean(by_policy(reports, p).filter_map(|r| r.fpr[i])), 7, 3),
                cell(mean(by_policy(reports, p).filter_map(|r| r.fnr[i])), 7, 3),
                cell(mean(by_policy(reports, p).map(|r| r.action_accuracy[i])), 7, 3)
            )
            .unwrap();
        }
    }
    out
}
