use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskGroup {
    Low,
    Intermediate,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: RiskGroup,
    pub n: usize,
    pub events: usize,
    pub event_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tertiles {
    /// Items with probability ≤ `cuts[0]` are low; ≤ `cuts[1]` intermediate.
    pub cuts: [f64; 2],
    pub assignments: Vec<RiskGroup>,
    pub groups: Vec<GroupSummary>,
}

/// Splits at the empirical 1/3 and 2/3 quantiles (inverse-CDF convention).
/// Items equal to a cut point fall in the lower group.
pub fn risk_tertiles(probs: &[f64], events: &[bool]) -> Result<Tertiles> {
    if probs.len() != events.len() {
        return Err(Error::LengthMismatch(probs.len(), events.len()));
    }
    if probs.len() < 3 {
        return Err(Error::UndersizedGroup(format!("{} samples; tertiles need at least 3", probs.len())));
    }
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("probability"));
    }
    let mut sorted = probs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let q = |num: usize| sorted[(num * n).div_ceil(3) - 1];
    let cuts = [q(1), q(2)];
    let assignments: Vec<RiskGroup> = probs
        .iter()
        .map(|&p| {
            if p <= cuts[0] {
                RiskGroup::Low
            } else if p <= cuts[1] {
                RiskGroup::Intermediate
            } else {
                RiskGroup::High
            }
        })
        .collect();
    let groups = [RiskGroup::Low, RiskGroup::Intermediate, RiskGroup::High]
        .into_iter()
        .map(|g| {
            let members: Vec<bool> = assignments.iter().zip(events).filter(|(a, _)| **a == g).map(|(_, &e)| e).collect();
            let ev = members.iter().filter(|&&e| e).count();
            let rate = if members.is_empty() { f64::NAN } else { ev as f64 / members.len() as f64 };
            GroupSummary { group: g, n: members.len(), events: ev, event_rate: rate }
        })
        .collect();
    Ok(Tertiles { cuts, assignments, groups })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_distinct() {
        let p: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let e: Vec<bool> = (1..=9).map(|i| i > 5).collect();
        let t = risk_tertiles(&p, &e).unwrap();
        assert!(t.groups.iter().all(|g| g.n == 3));
        let rates: Vec<f64> = t.groups.iter().map(|g| g.event_rate).collect();
        assert!(rates.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn ties_go_low() {
        let p = [0.1, 0.3, 0.3, 0.3, 0.8, 0.9];
        let t = risk_tertiles(&p, &[false; 6]).unwrap();
        assert_eq!(t.cuts, [0.3, 0.3]);
        assert_eq!(t.groups[0].n, 4);
        assert_eq!(t.groups[1].n, 0);
        assert_eq!(t.groups[2].n, 2);
    }

    #[test]
    fn too_few() {
        assert!(risk_tertiles(&[0.1, 0.2], &[true, false]).is_err());
    }
}
