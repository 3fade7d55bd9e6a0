use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::study::{Segment, SegmentFinding, SegmentLabelSet};

/// Model output for one segment. `stenosis_pct` is in percent and may fall
/// outside `[0, 100]`; rendering clamps it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SegmentPrediction {
    pub stenosis_pct: f64,
    pub p_stenosis: f64,
    pub p_calcification: f64,
    pub p_thrombus: f64,
    pub p_cto: f64,
}

pub type StudyPrediction = BTreeMap<Segment, SegmentPrediction>;

/// Probability cut-offs for the rendered flags (positive iff p ≥ threshold).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingThresholds {
    pub stenosis: f64,
    pub calcification: f64,
    pub thrombus: f64,
    pub cto: f64,
}

impl Default for OperatingThresholds {
    fn default() -> Self {
        Self { stenosis: 0.5, calcification: 0.5, thrombus: 0.5, cto: 0.5 }
    }
}

impl SegmentPrediction {
    /// Degenerate prediction that restates a known finding.
    pub fn from_finding(segment: Segment, f: &SegmentFinding) -> Self {
        let pct = f.stenosis_or_zero();
        let b = |x: bool| if x { 1.0 } else { 0.0 };
        Self {
            stenosis_pct: pct,
            p_stenosis: b(pct >= segment.significance_threshold()),
            p_calcification: b(f.calcification.is_significant()),
            p_thrombus: b(f.thrombus),
            p_cto: b(f.cto),
        }
    }
}

/// Predictions restating a label set, for all 18 segments.
pub fn prediction_from_labels(labels: &SegmentLabelSet) -> StudyPrediction {
    Segment::ALL.iter().map(|&s| (s, SegmentPrediction::from_finding(s, &labels.finding(s)))).collect()
}

/// Renders one line per segment, in canonical segment order:
///
/// `Proximal LAD: 72% stenosis, calcification moderate  # flags: significant-stenosis calcification`
///
/// The stenosis flag is raised when the rounded percentage reaches the
/// segment's significance cut-off or `p_stenosis` reaches its threshold.
pub fn render_report(prediction: &StudyPrediction, thresholds: &OperatingThresholds) -> Result<String> {
    let mut out = String::new();
    for seg in Segment::ALL {
        let p = prediction.get(&seg).ok_or_else(|| Error::IncompletePrediction(seg.id().into()))?;
        if !p.stenosis_pct.is_finite() {
            return Err(Error::NonFinite("stenosis prediction"));
        }
        let pct = p.stenosis_pct.clamp(0.0, 100.0).round();
        let mut findings = vec![format!("{pct}% stenosis")];
        let mut flags = Vec::new();
        if pct >= seg.significance_threshold() || p.p_stenosis >= thresholds.stenosis {
            flags.push("significant-stenosis");
        }
        if p.p_calcification >= thresholds.calcification {
            findings.push("calcification moderate".into());
            flags.push("calcification");
        }
        if p.p_thrombus >= thresholds.thrombus {
            findings.push("thrombus".into());
            flags.push("thrombus");
        }
        if p.p_cto >= thresholds.cto {
            findings.push("CTO".into());
            flags.push("cto");
        }
        write!(out, "{}: {}", seg.display_name(), findings.join(", ")).unwrap();
        if !flags.is_empty() {
            write!(out, "  # flags: {}", flags.join(" ")).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Renders the exact findings of `labels` for the listed segments.
pub fn render_labels(labels: &SegmentLabelSet, segments: &[Segment]) -> String {
    let mut out = String::new();
    for &seg in segments {
        let f = labels.finding(seg);
        let mut findings = Vec::new();
        if let Some(p) = f.stenosis_pct {
            findings.push(format!("{}% stenosis", p.round()));
        }
        if f.calcification != Default::default() {
            findings.push(format!("calcification {}", f.calcification.as_str()));
        }
        if f.thrombus {
            findings.push("thrombus".into());
        }
        if f.cto {
            findings.push("CTO".into());
        }
        if findings.is_empty() {
            findings.push("normal".into());
        }
        writeln!(out, "{}: {}", seg.display_name(), findings.join(", ")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::parse_report;
    use crate::study::Dominance;

    #[test]
    fn all_zero_prediction() {
        let pred: StudyPrediction = Segment::ALL.iter().map(|&s| (s, SegmentPrediction::default())).collect();
        let text = render_report(&pred, &OperatingThresholds::default()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 18);
        assert!(lines.iter().all(|l| l.ends_with(": 0% stenosis")));
    }

    #[test]
    fn significant_flag_at_seventy() {
        let mut pred: StudyPrediction = Segment::ALL.iter().map(|&s| (s, SegmentPrediction::default())).collect();
        pred.get_mut(&Segment::ProxLad).unwrap().stenosis_pct = 72.0;
        let text = render_report(&pred, &OperatingThresholds::default()).unwrap();
        let line = text.lines().find(|l| l.starts_with("Proximal LAD")).unwrap();
        assert!(line.contains("72% stenosis"));
        assert!(line.contains("significant-stenosis"));
        let other = text.lines().find(|l| l.starts_with("Mid LAD")).unwrap();
        assert!(!other.contains("significant"));
    }

    #[test]
    fn missing_segment_is_incomplete() {
        let mut pred = prediction_from_labels(&SegmentLabelSet::new());
        pred.remove(&Segment::Pda);
        assert!(matches!(
            render_report(&pred, &OperatingThresholds::default()),
            Err(Error::IncompletePrediction(_))
        ));
    }

    #[test]
    fn clamps_out_of_range_regression() {
        let mut pred = prediction_from_labels(&SegmentLabelSet::new());
        pred.get_mut(&Segment::D2).unwrap().stenosis_pct = 131.7;
        pred.get_mut(&Segment::D1).unwrap().stenosis_pct = -4.0;
        let text = render_report(&pred, &OperatingThresholds::default()).unwrap();
        let parsed = parse_report(&text, None, Dominance::Right).unwrap().labels;
        assert_eq!(parsed.finding(Segment::D2).stenosis_pct, Some(100.0));
        assert_eq!(parsed.finding(Segment::D1).stenosis_pct, Some(0.0));
    }
}
