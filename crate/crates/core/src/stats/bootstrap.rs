use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;

pub const DEFAULT_BOOTSTRAP_ITERATIONS: usize = 1000;

/// Percentile bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub lo: f64,
    pub hi: f64,
    pub n_iter: usize,
    /// Replicates on which the metric was undefined and which were skipped.
    pub undefined_replicates: usize,
}

/// Errors that mark a replicate as undefined rather than failing the run.
pub fn is_undefined(e: &Error) -> bool {
    matches!(
        e,
        Error::UndefinedAuroc | Error::UndefinedMetric(_) | Error::UndersizedGroup(_) | Error::EmptyGroup(_)
    )
}

/// Inverse-CDF percentile of sorted values: the smallest value whose
/// empirical CDF reaches `q`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    let k = ((q * m as f64).ceil() as usize).clamp(1, m);
    sorted[k - 1]
}

/// Resamples whole units (patients) with replacement. Replicate `r` draws
/// from the counter stream `(seed, r)`, so results do not depend on
/// evaluation order. The metric sees the samples of the drawn units in draw
/// order.
pub fn bootstrap_ci<T, K, F>(samples: &[T], unit: K, metric: F, n_iter: usize, seed: u64) -> Result<BootstrapCi>
where
    T: Clone,
    K: Fn(&T) -> &str,
    F: Fn(&[T]) -> Result<f64>,
{
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        groups.entry(unit(s)).or_default().push(i);
    }
    let units: Vec<&Vec<usize>> = groups.values().collect();
    if units.is_empty() {
        return Err(Error::EmptyGroup("bootstrap needs at least one unit".into()));
    }
    let mut values = Vec::with_capacity(n_iter);
    let mut undefined = 0;
    let mut buf: Vec<T> = Vec::with_capacity(samples.len());
    for r in 0..n_iter {
        let mut rng = Rng::stream(seed, r as u64);
        buf.clear();
        for _ in 0..units.len() {
            buf.extend(units[rng.below(units.len())].iter().map(|&i| samples[i].clone()));
        }
        match metric(&buf) {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => undefined += 1,
            Err(e) if is_undefined(&e) => undefined += 1,
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(Error::AllReplicatesUndefined);
    }
    values.sort_by(f64::total_cmp);
    Ok(BootstrapCi {
        lo: percentile_sorted(&values, 0.025),
        hi: percentile_sorted(&values, 0.975),
        n_iter,
        undefined_replicates: undefined,
    })
}
