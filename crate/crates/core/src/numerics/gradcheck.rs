use crate::error::{Error, Result};

/// Outcome of a central-difference gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// Largest `|analytic − numeric| / max(1, |numeric|)` over parameters.
    pub max_rel_error: f64,
    /// Parameter index where the maximum occurred.
    pub worst_index: usize,
}

/// Compares `analytic` against central differences of `f` at `params`.
///
/// `eps` must lie in `[1e-7, 1e-3]`.
pub fn finite_diff_check<F>(mut f: F, params: &[f64], analytic: &[f64], eps: f64) -> Result<GradCheck>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps {eps} outside [1e-7, 1e-3]")));
    }
    if params.len() != analytic.len() {
        return Err(Error::LengthMismatch(params.len(), analytic.len()));
    }
    let mut x = params.to_vec();
    let mut worst = GradCheck { max_rel_error: 0.0, worst_index: 0 };
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + eps;
        let plus = f(&x);
        x[i] = orig - eps;
        let minus = f(&x);
        x[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let err = (analytic[i] - numeric).abs() / numeric.abs().max(1.0);
        if err > worst.max_rel_error {
            worst = GradCheck { max_rel_error: err, worst_index: i };
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_at_three() {
        let sq = |w: &[f64]| w[0] * w[0];
        let ok = finite_diff_check(sq, &[3.0], &[6.0], 1e-5).unwrap();
        assert!(ok.max_rel_error < 1e-8);
        let bad = finite_diff_check(sq, &[3.0], &[5.0], 1e-5).unwrap();
        assert!((bad.max_rel_error - 1.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_objective() {
        let f = |w: &[f64]| if w[0] > 0.0 { f64::NAN } else { 0.0 };
        assert!(matches!(finite_diff_check(f, &[0.0], &[0.0], 1e-5), Err(Error::NonFiniteObjective)));
    }

    #[test]
    fn eps_range_enforced() {
        assert!(finite_diff_check(|_| 0.0, &[0.0], &[0.0], 1e-2).is_err());
    }
}
