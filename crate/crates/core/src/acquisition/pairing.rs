use super::phase::{assign_phases, Phase};
use crate::error::{Error, Result};
use crate::study::{Segment, StudyRecord, Territory, VideoRecord};

/// Videos, report text and segment subset of one territory.
#[derive(Debug, Clone, PartialEq)]
pub struct TerritoryPair {
    pub territory: Territory,
    pub videos: Vec<VideoRecord>,
    pub report: String,
    pub segments: Vec<Segment>,
}

/// Splits a study into its LCA and RCA (videos, report, segments) pairs.
///
/// Only contrast-filled diagnostic videos are kept. Segment subsets follow
/// the study's dominance; co-dominant studies use the right-dominant split.
pub fn pair_videos_reports(study: &StudyRecord) -> Result<[TerritoryPair; 2]> {
    let mut s = study.clone();
    assign_phases(&mut s)?;
    let make = |t: Territory| -> Result<TerritoryPair> {
        let report = s.reports.get(t).ok_or_else(|| Error::UnpairedTerritory {
            study: s.study_id.clone(),
            territory: t.to_string(),
        })?;
        let videos: Vec<VideoRecord> = s
            .videos
            .iter()
            .filter(|v| v.contrast && v.phase == Some(Phase::Diagnostic) && v.artery.territory() == Some(t))
            .cloned()
            .collect();
        if videos.is_empty() {
            return Err(Error::UnpairedTerritory { study: s.study_id.clone(), territory: t.to_string() });
        }
        Ok(TerritoryPair { territory: t, videos, report: report.to_string(), segments: t.segments(s.dominance) })
    };
    Ok([make(Territory::Lca)?, make(Territory::Rca)?])
}
