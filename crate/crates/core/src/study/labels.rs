use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::segment::{Segment, N_SEGMENTS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Calcification {
    #[default]
    None,
    Mild,
    Moderate,
    Severe,
}

impl Calcification {
    pub fn is_significant(self) -> bool {
        matches!(self, Calcification::Moderate | Calcification::Severe)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Calcification::None => "none",
            Calcification::Mild => "mild",
            Calcification::Moderate => "moderate",
            Calcification::Severe => "severe",
        }
    }

    pub fn grade(self) -> u8 {
        self as u8
    }

    pub fn from_grade(g: u8) -> Option<Self> {
        [Self::None, Self::Mild, Self::Moderate, Self::Severe].get(g as usize).copied()
    }
}

/// Findings for one segment. An absent stenosis value means "not reported".
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SegmentFinding {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stenosis_pct: Option<f64>,
    #[serde(default)]
    pub calcification: Calcification,
    #[serde(default)]
    pub thrombus: bool,
    #[serde(default)]
    pub cto: bool,
}

impl SegmentFinding {
    /// Regression target in percent; unreported stenosis counts as 0.
    pub fn stenosis_or_zero(&self) -> f64 {
        self.stenosis_pct.unwrap_or(0.0)
    }
}

/// Per-segment findings. Segments missing from the map are treated as normal.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentLabelSet {
    findings: BTreeMap<Segment, SegmentFinding>,
}

/// Binary targets derived from one segment's findings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BinaryLabels {
    pub stenosis_significant: bool,
    pub calcif_significant: bool,
    pub thrombus: bool,
    pub cto: bool,
}

impl BinaryLabels {
    pub fn task(&self, task: BinaryTask) -> bool {
        match task {
            BinaryTask::Stenosis => self.stenosis_significant,
            BinaryTask::Calcification => self.calcif_significant,
            BinaryTask::Thrombus => self.thrombus,
            BinaryTask::Cto => self.cto,
        }
    }
}

/// The four binary per-segment tasks, in head order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryTask {
    Stenosis,
    Calcification,
    Thrombus,
    Cto,
}

impl BinaryTask {
    pub const ALL: [BinaryTask; 4] =
        [BinaryTask::Stenosis, BinaryTask::Calcification, BinaryTask::Thrombus, BinaryTask::Cto];

    pub fn as_str(self) -> &'static str {
        match self {
            BinaryTask::Stenosis => "stenosis",
            BinaryTask::Calcification => "calcification",
            BinaryTask::Thrombus => "thrombus",
            BinaryTask::Cto => "cto",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl SegmentLabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a finding after validating it. A CTO forces stenosis to 100%.
    pub fn insert(&mut self, segment: Segment, mut finding: SegmentFinding) -> Result<()> {
        normalize_finding(segment, &mut finding)?;
        self.findings.insert(segment, finding);
        Ok(())
    }

    pub fn get(&self, segment: Segment) -> Option<&SegmentFinding> {
        self.findings.get(&segment)
    }

    pub fn finding(&self, segment: Segment) -> SegmentFinding {
        self.findings.get(&segment).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Segment, &SegmentFinding)> {
        self.findings.iter().map(|(s, f)| (*s, f))
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    /// Re-applies validation to every entry; used after deserialisation.
    pub fn normalize(&mut self) -> Result<()> {
        for (seg, f) in self.findings.iter_mut() {
            normalize_finding(*seg, f)?;
        }
        Ok(())
    }

    /// Union of two label sets; entries of `other` win on overlap.
    pub fn merged(&self, other: &SegmentLabelSet) -> SegmentLabelSet {
        let mut findings = self.findings.clone();
        findings.extend(other.findings.iter().map(|(s, f)| (*s, *f)));
        SegmentLabelSet { findings }
    }

    /// Keeps only the listed segments.
    pub fn restricted(&self, segments: &[Segment]) -> SegmentLabelSet {
        SegmentLabelSet {
            findings: self
                .findings
                .iter()
                .filter(|(s, _)| segments.contains(s))
                .map(|(s, f)| (*s, *f))
                .collect(),
        }
    }

    /// Stenosis regression targets in percent for all 18 segments.
    pub fn stenosis_targets(&self) -> [f64; N_SEGMENTS] {
        let mut out = [0.0; N_SEGMENTS];
        for s in Segment::ALL {
            out[s.index()] = self.finding(s).stenosis_or_zero();
        }
        out
    }
}

fn normalize_finding(segment: Segment, f: &mut SegmentFinding) -> Result<()> {
    if let Some(p) = f.stenosis_pct {
        if !p.is_finite() || !(0.0..=100.0).contains(&p) {
            return Err(Error::Schema {
                path: segment.id().to_string(),
                message: format!("stenosis {p} outside [0, 100]"),
            });
        }
    }
    if f.cto {
        f.stenosis_pct = Some(100.0);
    }
    Ok(())
}

/// Derives the four binary targets for every one of the 18 segments.
///
/// Stenosis is significant at ≥70% (≥50% for the left main); calcification
/// when moderate or severe. Unreported segments are negative.
pub fn derive_binary_labels(labels: &SegmentLabelSet) -> [BinaryLabels; N_SEGMENTS] {
    let mut out = [BinaryLabels::default(); N_SEGMENTS];
    for s in Segment::ALL {
        let f = labels.finding(s);
        out[s.index()] = BinaryLabels {
            stenosis_significant: f.stenosis_pct.is_some_and(|p| p >= s.significance_threshold()),
            calcif_significant: f.calcification.is_significant(),
            thrombus: f.thrombus,
            cto: f.cto,
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn with_stenosis(seg: Segment, pct: f64) -> SegmentLabelSet {
        let mut l = SegmentLabelSet::new();
        l.insert(seg, SegmentFinding { stenosis_pct: Some(pct), ..Default::default() }).unwrap();
        l
    }

    #[test]
    fn stenosis_thresholds() {
        let b = derive_binary_labels(&with_stenosis(Segment::ProxLad, 70.0));
        assert!(b[Segment::ProxLad.index()].stenosis_significant);
        let b = derive_binary_labels(&with_stenosis(Segment::ProxLad, 69.0));
        assert!(!b[Segment::ProxLad.index()].stenosis_significant);
        let b = derive_binary_labels(&with_stenosis(Segment::LeftMain, 50.0));
        assert!(b[Segment::LeftMain.index()].stenosis_significant);
        let b = derive_binary_labels(&with_stenosis(Segment::LeftMain, 45.0));
        assert!(!b[Segment::LeftMain.index()].stenosis_significant);
    }

    #[test]
    fn calcification_grades() {
        let mut l = SegmentLabelSet::new();
        l.insert(Segment::MidRca, SegmentFinding { calcification: Calcification::Mild, ..Default::default() })
            .unwrap();
        assert!(!derive_binary_labels(&l)[Segment::MidRca.index()].calcif_significant);
        l.insert(Segment::MidRca, SegmentFinding { calcification: Calcification::Moderate, ..Default::default() })
            .unwrap();
        assert!(derive_binary_labels(&l)[Segment::MidRca.index()].calcif_significant);
    }

    #[test]
    fn cto_forces_full_occlusion_and_absent_is_negative() {
        let mut l = SegmentLabelSet::new();
        l.insert(Segment::ProxRca, SegmentFinding { stenosis_pct: Some(40.0), cto: true, ..Default::default() })
            .unwrap();
        assert_eq!(l.finding(Segment::ProxRca).stenosis_pct, Some(100.0));
        let b = derive_binary_labels(&l);
        assert!(b[Segment::ProxRca.index()].cto && b[Segment::ProxRca.index()].stenosis_significant);
        assert_eq!(b[Segment::Om2.index()], BinaryLabels::default());
        assert_eq!(l.stenosis_targets()[Segment::Om2.index()], 0.0);
    }

    #[test]
    fn out_of_range_rejected() {
        let mut l = SegmentLabelSet::new();
        assert!(l.insert(Segment::D1, SegmentFinding { stenosis_pct: Some(101.0), ..Default::default() }).is_err());
    }

    proptest! {
        #[test]
        fn significance_monotone_in_stenosis(seg in 0usize..18, a in 0.0f64..100.0, b in 0.0f64..100.0) {
            let seg = Segment::ALL[seg];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let l = derive_binary_labels(&with_stenosis(seg, lo))[seg.index()].stenosis_significant;
            let h = derive_binary_labels(&with_stenosis(seg, hi))[seg.index()].stenosis_significant;
            prop_assert!(!l || h);
        }
    }
}
