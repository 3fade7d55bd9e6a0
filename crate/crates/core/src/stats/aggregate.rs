use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One (score, label) pair at segment level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub patient_id: String,
    pub segment: String,
    pub score: f64,
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// All segment-level pairs pooled before the metric.
    Micro,
    /// Unweighted mean of per-segment metrics over segments where defined.
    Macro,
    /// A single segment; no averaging.
    None,
}

pub fn split_columns(samples: &[ScoredSample]) -> (Vec<f64>, Vec<bool>) {
    samples.iter().map(|s| (s.score, s.label)).unzip()
}

pub fn micro_average<F>(samples: &[ScoredSample], metric: F) -> Result<f64>
where
    F: Fn(&[f64], &[bool]) -> Result<f64>,
{
    if samples.is_empty() {
        return Err(Error::EmptyGroup("no samples to average".into()));
    }
    let (s, l) = split_columns(samples);
    metric(&s, &l)
}

/// Macro value plus the number of segments whose metric was undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroAverage {
    pub value: f64,
    pub segments_used: usize,
    pub segments_undefined: usize,
}

pub fn macro_average<F>(samples: &[ScoredSample], metric: F) -> Result<MacroAverage>
where
    F: Fn(&[f64], &[bool]) -> Result<f64>,
{
    let mut by_seg: BTreeMap<&str, Vec<&ScoredSample>> = BTreeMap::new();
    for s in samples {
        by_seg.entry(s.segment.as_str()).or_default().push(s);
    }
    if by_seg.is_empty() {
        return Err(Error::EmptyGroup("no samples to average".into()));
    }
    let (mut sum, mut used, mut undefined) = (0.0, 0, 0);
    for group in by_seg.values() {
        let (s, l): (Vec<f64>, Vec<bool>) = group.iter().map(|x| (x.score, x.label)).unzip();
        match metric(&s, &l) {
            Ok(v) => {
                sum += v;
                used += 1;
            }
            Err(e) if super::bootstrap::is_undefined(&e) => undefined += 1,
            Err(e) => return Err(e),
        }
    }
    if used == 0 {
        return Err(Error::UndefinedMetric("metric undefined on every segment".into()));
    }
    Ok(MacroAverage { value: sum / used as f64, segments_used: used, segments_undefined: undefined })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::auroc;

    fn s(seg: &str, score: f64, label: bool) -> ScoredSample {
        ScoredSample { patient_id: format!("p{score}"), segment: seg.into(), score, label }
    }

    #[test]
    fn micro_differs_from_macro() {
        // Each segment alone is perfectly ranked, but scales differ.
        let xs = vec![
            s("a", 0.1, false),
            s("a", 0.2, true),
            s("b", 0.8, false),
            s("b", 0.9, true),
        ];
        let micro = micro_average(&xs, auroc).unwrap();
        let mac = macro_average(&xs, auroc).unwrap();
        assert_eq!(mac.value, 1.0);
        assert_eq!(micro, 0.75);
    }

    #[test]
    fn single_segment_identity() {
        let xs = vec![s("a", 0.1, false), s("a", 0.4, false), s("a", 0.35, true), s("a", 0.8, true)];
        let (sc, l) = split_columns(&xs);
        assert_eq!(micro_average(&xs, auroc).unwrap(), auroc(&sc, &l).unwrap());
        assert_eq!(macro_average(&xs, auroc).unwrap().value, 0.75);
    }
}
