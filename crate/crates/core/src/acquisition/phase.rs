use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::study::{Artery, Equipment, StudyRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Diagnostic,
    Interventional,
    PostProcedural,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Diagnostic => "diagnostic",
            Phase::Interventional => "interventional",
            Phase::PostProcedural => "post_procedural",
        }
    }
}

/// Phase of each video given its artery and equipment flag, in acquisition
/// order.
///
/// Each artery runs its own two-state machine. Before the first equipment
/// sighting on that artery every video is diagnostic (unless it shows
/// equipment itself); afterwards videos with equipment are interventional
/// and videos without are post-procedural. Contrast does not affect the
/// phase; selection filters non-contrast videos separately.
pub fn phase_sequence(videos: &[(Artery, Equipment)]) -> Vec<Phase> {
    let mut intervened: BTreeSet<Artery> = BTreeSet::new();
    videos
        .iter()
        .map(|&(artery, equipment)| {
            if equipment != Equipment::None {
                intervened.insert(artery);
                Phase::Interventional
            } else if intervened.contains(&artery) {
                Phase::PostProcedural
            } else {
                Phase::Diagnostic
            }
        })
        .collect()
}

/// Sets `phase` on every video of the study. Videos must already be in
/// acquisition order.
pub fn assign_phases(study: &mut StudyRecord) -> Result<()> {
    if study.videos.windows(2).any(|w| w[1].acquired_at < w[0].acquired_at) {
        return Err(Error::UnsortedStudy(study.study_id.clone()));
    }
    let seq: Vec<(Artery, Equipment)> = study.videos.iter().map(|v| (v.artery, v.equipment)).collect();
    for (v, p) in study.videos.iter_mut().zip(phase_sequence(&seq)) {
        v.phase = Some(p);
    }
    Ok(())
}
