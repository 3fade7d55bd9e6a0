use super::phase::{assign_phases, Phase};
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::study::{Artery, StudyRecord, VideoRecord};

/// How to choose when a study holds more diagnostic videos than fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Chronologically first `max_n`.
    Inference,
    /// Seeded uniform sample of `max_n`, returned in shuffled order.
    Training { seed: u64 },
}

/// Diagnostic videos chosen for a study plus the padding mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub videos: Vec<VideoRecord>,
    /// Length `max_n`; `true` for real slots, `false` for padding.
    pub mask: Vec<bool>,
}

impl Selection {
    pub fn n_real(&self) -> usize {
        self.videos.len()
    }
}

/// Keeps contrast-filled diagnostic LCA/RCA videos, at most `max_n` of them.
///
/// Phases are computed on the fly for any video that lacks one.
pub fn select_diagnostic(study: &StudyRecord, max_n: usize, mode: SelectionMode) -> Result<Selection> {
    let owned;
    let study = if study.videos.iter().any(|v| v.phase.is_none()) {
        let mut s = study.clone();
        assign_phases(&mut s)?;
        owned = s;
        &owned
    } else {
        study
    };
    let eligible: Vec<&VideoRecord> = study
        .videos
        .iter()
        .filter(|v| v.phase == Some(Phase::Diagnostic) && v.contrast && v.artery != Artery::Other)
        .collect();
    if eligible.is_empty() {
        return Err(Error::NoDiagnosticContent);
    }
    let chosen: Vec<VideoRecord> = if eligible.len() <= max_n {
        eligible.into_iter().cloned().collect()
    } else {
        match mode {
            SelectionMode::Inference => eligible.into_iter().take(max_n).cloned().collect(),
            SelectionMode::Training { seed } => {
                let mut rng = Rng::new(seed);
                rng.sample_indices(eligible.len(), max_n)
                    .into_iter()
                    .map(|i| eligible[i].clone())
                    .collect()
            }
        }
    };
    let mut mask = vec![false; max_n.max(chosen.len())];
    mask[..chosen.len()].fill(true);
    Ok(Selection { videos: chosen, mask })
}
