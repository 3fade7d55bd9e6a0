use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pair-counting is used up to this many positive/negative pairs.
pub const PAIR_COUNT_LIMIT: usize = 10_000;

pub(crate) fn check_scores(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("score"));
    }
    let p = labels.iter().filter(|&&l| l).count();
    Ok((p, labels.len() - p))
}

/// Twice the Mann–Whitney win count: 2 per positive ranked above a negative,
/// 1 per tie. Counted over all pairs.
pub fn mann_whitney_pairs(scores: &[f64], labels: &[bool]) -> u64 {
    let mut w = 0u64;
    for (sp, _) in scores.iter().zip(labels).filter(|(_, &l)| l) {
        for (sn, _) in scores.iter().zip(labels).filter(|(_, &l)| !l) {
            if sp > sn {
                w += 2;
            } else if sp == sn {
                w += 1;
            }
        }
    }
    w
}

/// Same count as [`mann_whitney_pairs`], from one sort.
pub fn mann_whitney_sorted(scores: &[f64], labels: &[bool]) -> u64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let (mut w, mut neg_below, mut i) = (0u64, 0u64, 0);
    while i < idx.len() {
        let mut j = i;
        let (mut p, mut n) = (0u64, 0u64);
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            if labels[idx[j]] {
                p += 1;
            } else {
                n += 1;
            }
            j += 1;
        }
        w += 2 * p * neg_below + p * n;
        neg_below += n;
        i = j;
    }
    w
}

/// Area under the ROC curve: P(score_pos > score_neg) + ½·P(tie).
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (p, n) = check_scores(scores, labels)?;
    if p == 0 || n == 0 {
        return Err(Error::UndefinedAuroc);
    }
    let w = if p * n <= PAIR_COUNT_LIMIT {
        mann_whitney_pairs(scores, labels)
    } else {
        mann_whitney_sorted(scores, labels)
    };
    Ok(w as f64 / (2 * p * n) as f64)
}

/// Average precision. Samples are ranked by descending score; equal scores
/// keep their input order.
pub fn auprc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (p, _) = check_scores(scores, labels)?;
    if p == 0 {
        return Err(Error::UndefinedMetric("AUPRC without positives".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut sum) = (0usize, 0.0);
    for (k, &i) in idx.iter().enumerate() {
        if labels[i] {
            tp += 1;
            sum += tp as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / p as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    /// `None` when nothing is predicted positive.
    pub ppv: Option<f64>,
    /// `None` when nothing is predicted negative.
    pub npv: Option<f64>,
    pub youden_j: f64,
}

/// Confusion counts with the rule "positive iff score ≥ threshold".
pub fn operating_point_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<OperatingPoint> {
    let (p, n) = check_scores(scores, labels)?;
    if p == 0 || n == 0 {
        return Err(Error::UndefinedMetric("operating point needs both classes".into()));
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    for (s, l) in scores.iter().zip(labels) {
        if *s >= threshold {
            if *l {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    let (fn_, tn) = (p - tp, n - fp);
    let ratio = |a: usize, b: usize| if a + b == 0 { None } else { Some(a as f64 / (a + b) as f64) };
    let sensitivity = tp as f64 / p as f64;
    let specificity = tn as f64 / n as f64;
    Ok(OperatingPoint {
        threshold,
        sensitivity,
        specificity,
        ppv: ratio(tp, fp),
        npv: ratio(tn, fn_),
        youden_j: sensitivity + specificity - 1.0,
    })
}

/// Threshold maximizing Youden's J over the distinct scores. Ties on J go
/// to the lowest threshold.
pub fn youden_operating_point(scores: &[f64], labels: &[bool]) -> Result<OperatingPoint> {
    let (p, n) = check_scores(scores, labels)?;
    if p == 0 || n == 0 {
        return Err(Error::UndefinedMetric("Youden index needs both classes".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Walking thresholds upward: everything below the current score is
    // predicted negative.
    let (mut tp, mut tn) = (p as u128, 0u128);
    let mut best: Option<(u128, f64)> = None;
    let mut i = 0;
    while i < idx.len() {
        let t = scores[idx[i]];
        // J·P·N + P·N = tp·N + tn·P
        let key = tp * n as u128 + tn * p as u128;
        if best.map_or(true, |(k, _)| key > k) {
            best = Some((key, t));
        }
        while i < idx.len() && scores[idx[i]] == t {
            if labels[idx[i]] {
                tp -= 1;
            } else {
                tn += 1;
            }
            i += 1;
        }
    }
    operating_point_at(scores, labels, best.expect("non-empty").1)
}
