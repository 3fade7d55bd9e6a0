use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::ranking::{auroc, check_scores};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelongResult {
    pub auc_a: f64,
    pub auc_b: f64,
    /// Variance of `auc_a − auc_b`.
    pub variance: f64,
    pub z: f64,
    pub p_two_sided: f64,
}

fn psi(x: f64, y: f64) -> f64 {
    if x > y {
        1.0
    } else if x == y {
        0.5
    } else {
        0.0
    }
}

/// Structural components: for each positive, the fraction of negatives it
/// beats; for each negative, the fraction of positives that beat it.
pub fn structural_components(scores: &[f64], labels: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(s, _)| *s).collect();
    let v10 = pos.iter().map(|&x| neg.iter().map(|&y| psi(x, y)).sum::<f64>() / neg.len() as f64).collect();
    let v01 = neg.iter().map(|&y| pos.iter().map(|&x| psi(x, y)).sum::<f64>() / pos.len() as f64).collect();
    (v10, v01)
}

fn cov(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
}

/// DeLong comparison of two correlated AUROCs on the same samples, with a
/// two-sided normal p-value.
pub fn delong_test(scores_a: &[f64], scores_b: &[f64], labels: &[bool]) -> Result<DelongResult> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::LengthMismatch(scores_a.len(), scores_b.len()));
    }
    let (p, n) = check_scores(scores_a, labels)?;
    check_scores(scores_b, labels)?;
    if p == 0 || n == 0 {
        return Err(Error::UndefinedAuroc);
    }
    if p < 2 || n < 2 {
        return Err(Error::UndersizedGroup("DeLong needs at least two positives and two negatives".into()));
    }
    let auc_a = auroc(scores_a, labels)?;
    let auc_b = auroc(scores_b, labels)?;
    let (a10, a01) = structural_components(scores_a, labels);
    let (b10, b01) = structural_components(scores_b, labels);
    let s10 = cov(&a10, &a10) + cov(&b10, &b10) - 2.0 * cov(&a10, &b10);
    let s01 = cov(&a01, &a01) + cov(&b01, &b01) - 2.0 * cov(&a01, &b01);
    let variance = (s10 / p as f64 + s01 / n as f64).max(0.0);
    let diff = auc_a - auc_b;
    let (z, p_two_sided) = if variance == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let z = diff / variance.sqrt();
        (z, erfc(z.abs() / std::f64::consts::SQRT_2))
    };
    Ok(DelongResult { auc_a, auc_b, variance, z, p_two_sided })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_scores() {
        let s = [0.1, 0.7, 0.4, 0.9, 0.3, 0.6];
        let l = [false, true, false, true, false, true];
        let r = delong_test(&s, &s, &l).unwrap();
        assert_eq!((r.z, r.p_two_sided), (0.0, 1.0));
    }

    #[test]
    fn antisymmetric() {
        let a = [0.1, 0.7, 0.4, 0.9, 0.3, 0.6, 0.5, 0.2];
        let b = [0.3, 0.5, 0.6, 0.8, 0.1, 0.4, 0.2, 0.7];
        let l = [false, true, false, true, false, true, true, false];
        let ab = delong_test(&a, &b, &l).unwrap();
        let ba = delong_test(&b, &a, &l).unwrap();
        assert_eq!(ab.z, -ba.z);
        assert_eq!(ab.p_two_sided, ba.p_two_sided);
        assert_eq!(ab.z.signum(), (ab.auc_a - ab.auc_b).signum());
    }
}
