use serde::{Deserialize, Serialize};

use super::aggregate::{Averaging, ScoredSample};
use super::bootstrap::bootstrap_ci;
use crate::error::Result;

/// Serialized metric with its bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: usize,
    pub n_abnormal: usize,
    pub undefined_replicates: usize,
    pub averaging: Averaging,
    /// Point estimate lies inside the interval.
    pub ci_contains_estimate: bool,
}

/// Micro-averaged metric over `samples`, with a patient-level bootstrap CI.
pub fn metric_report<F>(name: &str, samples: &[ScoredSample], metric: F, n_iter: usize, seed: u64) -> Result<MetricReport>
where
    F: Fn(&[f64], &[bool]) -> Result<f64> + Copy,
{
    let value = super::aggregate::micro_average(samples, metric)?;
    let ci = bootstrap_ci(
        samples,
        |s: &ScoredSample| s.patient_id.as_str(),
        |xs: &[ScoredSample]| super::aggregate::micro_average(xs, metric),
        n_iter,
        seed,
    )?;
    let n_abnormal = samples.iter().filter(|s| s.label).count();
    if !(ci.lo..=ci.hi).contains(&value) {
        log::warn!("{name}: estimate {value} outside bootstrap interval [{}, {}]", ci.lo, ci.hi);
    }
    Ok(MetricReport {
        metric: name.to_string(),
        value,
        ci_lo: ci.lo,
        ci_hi: ci.hi,
        n: samples.len(),
        n_abnormal,
        undefined_replicates: ci.undefined_replicates,
        averaging: Averaging::Micro,
        ci_contains_estimate: (ci.lo..=ci.hi).contains(&value),
    })
}
