use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::cosine_similarity;
use crate::stats::{bootstrap_ci, welch_t_test, WelchResult};
use crate::study::{Segment, SegmentLabelSet};

/// `1 − cos(a, b)`, in `[0, 2]`.
pub fn embedding_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok((1.0 - cosine_similarity(a, b)?).clamp(0.0, 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProgressionStatus {
    Stable,
    Improved,
    Progressed,
}

impl ProgressionStatus {
    pub const ALL: [ProgressionStatus; 3] =
        [ProgressionStatus::Stable, ProgressionStatus::Improved, ProgressionStatus::Progressed];

    pub fn as_str(self) -> &'static str {
        match self {
            ProgressionStatus::Stable => "stable",
            ProgressionStatus::Improved => "improved",
            ProgressionStatus::Progressed => "progressed",
        }
    }
}

pub const PROGRESSION_DELTA: f64 = 20.0;
pub const NEW_LESION_PCT: f64 = 50.0;

/// Progressed if any segment crosses above 50 % from at most 50 %, or
/// worsens by at least 20 points; otherwise improved if any segment drops
/// by at least 20 points; otherwise stable. Absent segments count as 0 %.
pub fn classify_progression(t0: &SegmentLabelSet, t1: &SegmentLabelSet) -> ProgressionStatus {
    let mut improved = false;
    for seg in Segment::ALL {
        let a = t0.finding(seg).stenosis_or_zero();
        let b = t1.finding(seg).stenosis_or_zero();
        let delta = b - a;
        if (a <= NEW_LESION_PCT && b > NEW_LESION_PCT) || delta >= PROGRESSION_DELTA {
            return ProgressionStatus::Progressed;
        }
        if delta <= -PROGRESSION_DELTA {
            improved = true;
        }
    }
    if improved {
        ProgressionStatus::Improved
    } else {
        ProgressionStatus::Stable
    }
}

/// Two consecutive studies of one patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPairObservation {
    pub patient_id: String,
    pub earlier_study: String,
    pub later_study: String,
    pub earlier_embedding: Vec<f64>,
    pub later_embedding: Vec<f64>,
    pub earlier_labels: SegmentLabelSet,
    pub later_labels: SegmentLabelSet,
    pub pci_between: bool,
}

impl StudyPairObservation {
    pub fn status(&self) -> ProgressionStatus {
        classify_progression(&self.earlier_labels, &self.later_labels)
    }

    pub fn distance(&self) -> Result<f64> {
        embedding_distance(&self.earlier_embedding, &self.later_embedding)
    }
}

/// One row of the progression table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub patient_id: String,
    pub earlier_study: String,
    pub later_study: String,
    pub pci_between: bool,
    pub status: ProgressionStatus,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusSummary {
    pub status: ProgressionStatus,
    pub n: usize,
    pub mean_distance: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reference: ProgressionStatus,
    pub other: ProgressionStatus,
    pub welch: WelchResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressionReport {
    pub rows: Vec<PairRow>,
    pub groups: Vec<StatusSummary>,
    /// Stable versus improved, then stable versus progressed, where both
    /// groups hold at least two pairs.
    pub comparisons: Vec<Comparison>,
    pub notices: Vec<String>,
}

/// Distances grouped by status, with patient-level bootstrap intervals for
/// the group means and Welch tests against the stable group.
pub fn progression_report(pairs: &[StudyPairObservation], n_boot: usize, seed: u64) -> Result<ProgressionReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyGroup("no study pairs".into()));
    }
    let rows = pairs
        .iter()
        .map(|p| {
            Ok(PairRow {
                patient_id: p.patient_id.clone(),
                earlier_study: p.earlier_study.clone(),
                later_study: p.later_study.clone(),
                pci_between: p.pci_between,
                status: p.status(),
                distance: p.distance()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by: BTreeMap<ProgressionStatus, Vec<&PairRow>> = BTreeMap::new();
    for r in &rows {
        by.entry(r.status).or_default().push(r);
    }
    let mut notices = Vec::new();
    let mut groups = Vec::new();
    for (&status, members) in &by {
        let mean = members.iter().map(|r| r.distance).sum::<f64>() / members.len() as f64;
        let ci = bootstrap_ci(
            members,
            |r: &&PairRow| r.patient_id.as_str(),
            |xs: &[&PairRow]| Ok(xs.iter().map(|r| r.distance).sum::<f64>() / xs.len() as f64),
            n_boot,
            seed,
        )
        .ok();
        groups.push(StatusSummary {
            status,
            n: members.len(),
            mean_distance: mean,
            ci_lo: ci.as_ref().map(|c| c.lo),
            ci_hi: ci.as_ref().map(|c| c.hi),
        });
    }
    let mut comparisons = Vec::new();
    let dist = |s: ProgressionStatus| -> Vec<f64> { by.get(&s).map(|v| v.iter().map(|r| r.distance).collect()).unwrap_or_default() };
    let stable = dist(ProgressionStatus::Stable);
    for other in [ProgressionStatus::Improved, ProgressionStatus::Progressed] {
        let o = dist(other);
        if stable.len() < 2 || o.len() < 2 {
            notices.push(format!(
                "stable vs {} skipped: group sizes {} and {}",
                other.as_str(),
                stable.len(),
                o.len()
            ));
            continue;
        }
        let welch = welch_t_test(&stable, &o)?;
        if welch.degenerate {
            notices.push(format!("stable vs {}: zero variance in both groups", other.as_str()));
        }
        comparisons.push(Comparison { reference: ProgressionStatus::Stable, other, welch });
    }
    Ok(ProgressionReport { rows, groups, comparisons, notices })
}
