use super::{EvalError, EvalRecord};
use crate::intrinsic::{count_correct, round_predictions, EVENT_COUNT};
use crate::networks::{ActionId, PNetwork, PnetSample};

const N: usize = ActionId::COUNT;

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// One-vs-rest counts per action, the oracle's choice taken as truth.
fn counts(records: &[EvalRecord]) -> [[u64; 4]; N] {
    let mut c = [[0u64; 4]; N];
    for r in records {
        for a in ActionId::ALL {
            let predicted = r.agent_action == a;
            let actual = r.oracle_action == a;
            let slot = match (predicted, actual) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            c[a.index()][slot] += 1;
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Scores {
    pub per_action: [f64; N],
    /// Unweighted mean over the four actions.
    pub overall: f64,
}

/// Per-action F1 against the oracle. Undefined precision or recall count
/// as zero.
pub fn f1_scores(records: &[EvalRecord]) -> Result<F1Scores, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoRecords);
    }
    let per_action = counts(records).map(|[tp, fp, fn_, _]| {
        match (ratio(tp, tp + fp), ratio(tp, tp + fn_)) {
            (Some(p), Some(r)) if p + r > 0.0 => 2.0 * p * r / (p + r),
            _ => 0.0,
        }
    });
    Ok(F1Scores {
        per_action,
        overall: per_action.iter().sum::<f64>() / N as f64,
    })
}

/// Rates for one action treated one-vs-rest. A rate is `None` when its
/// denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionRates {
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub accuracy: f64,
    /// Records where the oracle chose this action.
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confusion {
    pub per_action: [ActionRates; N],
    /// Fraction of records where agent and oracle agree.
    pub accuracy: f64,
}

pub fn confusion_metrics(records: &[EvalRecord]) -> Result<Confusion, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoRecords);
    }
    let n = records.len() as u64;
    let per_action = counts(records).map(|[tp, fp, fn_, tn]| ActionRates {
        tpr: ratio(tp, tp + fn_),
        tnr: ratio(tn, tn + fp),
        fpr: ratio(fp, fp + tn),
        fnr: ratio(fn_, fn_ + tp),
        accuracy: (tp + tn) as f64 / n as f64,
        support: tp + fn_,
    });
    let agree = records.iter().filter(|r| r.agent_action == r.oracle_action).count();
    Ok(Confusion {
        per_action,
        accuracy: agree as f64 / n as f64,
    })
}

/// Successful handshakes per handshake attempt; `None` without attempts.
pub fn handshake_ratio(records: &[EvalRecord]) -> Option<f64> {
    let attempts = records.iter().filter(|r| r.agent_action == ActionId::HANDSHAKE);
    let (tried, shook) = attempts.fold((0, 0), |(t, s), r| (t + 1, s + u64::from(r.events.handshake())));
    ratio(shook, tried)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnetAccuracy {
    pub per_event: [f64; EVENT_COUNT],
    /// Fraction of samples with every event right.
    pub all_events: f64,
    /// Accuracy of always predicting each event's more frequent label.
    pub majority_baseline: [f64; EVENT_COUNT],
    pub samples: usize,
}

/// Accuracy of the rounded predictions on held-out samples.
pub fn pnet_accuracy(pnet: &mut PNetwork, heldout: &[PnetSample<'_>]) -> Result<PnetAccuracy, EvalError> {
    if heldout.is_empty() {
        return Err(EvalError::NoRecords);
    }
    let mut right = [0usize; EVENT_COUNT];
    let mut positives = [0usize; EVENT_COUNT];
    let mut all = 0;
    for s in heldout {
        let predicted = round_predictions(&pnet.forward(s.grayscale, s.action)?);
        for i in 0..EVENT_COUNT {
            right[i] += usize::from(predicted.get(i) == s.events.get(i));
            positives[i] += usize::from(s.events.get(i));
        }
        all += usize::from(count_correct(predicted, s.events) == EVENT_COUNT);
    }
    let n = heldout.len();
    let frac = |k: usize| k as f64 / n as f64;
    Ok(PnetAccuracy {
        per_event: right.map(frac),
        all_events: frac(all),
        majority_baseline: positives.map(|p| frac(p.max(n - p))),
        samples: n,
    })
}
