use super::manifest::Cohort;
use super::records::{Split, SplitMap};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Assigns every patient to train/val/test.
///
/// Patients are shuffled under `seed` and cut into consecutive blocks whose
/// sizes come from the largest-remainder method applied to `ratios`; ties
/// between equal remainders go to the earlier split.
pub fn split_by_patient(cohort: &mut Cohort, ratios: [f64; 3], seed: u64) -> Result<SplitMap> {
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidArgument("split ratios must be positive".into()));
    }
    if (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("split ratios must sum to 1".into()));
    }
    let mut patients = cohort.patients();
    if patients.len() < ratios.len() {
        return Err(Error::CohortTooSmall { patients: patients.len(), splits: ratios.len() });
    }
    let sizes = largest_remainder(patients.len(), &ratios);
    Rng::new(seed).shuffle(&mut patients);
    let mut map = SplitMap::new();
    let mut it = patients.into_iter();
    for (split, n) in Split::ALL.iter().zip(sizes) {
        for p in it.by_ref().take(n) {
            map.insert(p, *split);
        }
    }
    cohort.splits = map.clone();
    Ok(map)
}

/// Integer apportionment of `n` items by `ratios`.
pub fn largest_remainder(n: usize, ratios: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}
