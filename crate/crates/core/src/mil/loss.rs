use super::heads::HeadOutput;
use super::params::{HeadConfig, HEAD_OUTPUTS};
use crate::error::{Error, Result};
use crate::numerics::{sigmoid, softplus};
use crate::study::{derive_binary_labels, BinaryTask, SegmentLabelSet, N_SEGMENTS};

pub fn huber(e: f64, delta: f64) -> f64 {
    if e.abs() <= delta {
        0.5 * e * e
    } else {
        delta * (e.abs() - 0.5 * delta)
    }
}

pub fn huber_grad(e: f64, delta: f64) -> f64 {
    e.clamp(-delta, delta)
}

/// `−[y log σ(x) + (1 − y) log(1 − σ(x))]`, evaluated stably.
pub fn bce_with_logits(logit: f64, label: bool) -> f64 {
    if label {
        softplus(-logit)
    } else {
        softplus(logit)
    }
}

pub fn bce_grad(logit: f64, label: bool) -> f64 {
    sigmoid(logit) - if label { 1.0 } else { 0.0 }
}

/// Per-study supervision over all 18 segments. Segments without a finding
/// count as 0 % and negative.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyTargets {
    /// Stenosis as a fraction (percent / 100).
    pub stenosis: [f64; N_SEGMENTS],
    /// `[task][segment]` in [`BinaryTask`] order.
    pub binary: [[bool; N_SEGMENTS]; 4],
}

impl StudyTargets {
    pub fn from_labels(labels: &SegmentLabelSet) -> Self {
        let pct = labels.stenosis_targets();
        let bin = derive_binary_labels(labels);
        let mut binary = [[false; N_SEGMENTS]; 4];
        for task in BinaryTask::ALL {
            for (s, b) in bin.iter().enumerate() {
                binary[task.index()][s] = b.task(task);
            }
        }
        Self { stenosis: pct.map(|p| p / 100.0), binary }
    }
}

/// Loss terms of one study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    /// Mean Huber over segments (unweighted).
    pub stenosis: f64,
    /// Mean BCE per binary task (unweighted).
    pub binary: [f64; 4],
}

/// Weighted multi-task loss and its gradient with respect to the raw head
/// outputs; the gradient is scaled by `scale` (e.g. `1 / batch`).
pub fn multitask_loss(out: &HeadOutput, targets: &StudyTargets, config: &HeadConfig, scale: f64) -> Result<(LossParts, Vec<f64>)> {
    if out.raw.len() != HEAD_OUTPUTS {
        return Err(Error::LengthMismatch(out.raw.len(), HEAD_OUTPUTS));
    }
    if out.raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("prediction"));
    }
    let n = N_SEGMENTS as f64;
    let mut grad = vec![0.0; HEAD_OUTPUTS];
    let mut stenosis = 0.0;
    for s in 0..N_SEGMENTS {
        let e = out.raw[s] - targets.stenosis[s];
        stenosis += huber(e, config.huber_delta) / n;
        grad[s] = scale * config.stenosis_weight * huber_grad(e, config.huber_delta) / n;
    }
    let mut binary = [0.0; 4];
    for task in BinaryTask::ALL {
        let t = task.index();
        let w = config.binary_weights[t];
        for s in 0..N_SEGMENTS {
            let i = (1 + t) * N_SEGMENTS + s;
            let y = targets.binary[t][s];
            binary[t] += bce_with_logits(out.raw[i], y) / n;
            grad[i] = scale * w * bce_grad(out.raw[i], y) / n;
        }
    }
    let total = config.stenosis_weight * stenosis
        + binary.iter().zip(&config.binary_weights).map(|(l, w)| l * w).sum::<f64>();
    Ok((LossParts { total, stenosis, binary }, grad))
}
