//! From a raw per-study video list to model input: view classes, procedural
//! phases, diagnostic selection and video/report pairing.

mod pairing;
mod phase;
mod select;
mod view;

pub use pairing::{pair_videos_reports, TerritoryPair};
pub use phase::{assign_phases, phase_sequence, Phase};
pub use select::{select_diagnostic, Selection, SelectionMode};
pub use view::{classify_view, matching_views, AngleRange, ViewClass, VIEW_TABLE};

use crate::error::Result;
use crate::study::StudyRecord;

/// Fills `view_class` on every video of the study.
pub fn classify_study_views(study: &mut StudyRecord) -> Result<()> {
    for v in &mut study.videos {
        v.view_class = Some(classify_view(v.primary_angle_deg, v.secondary_angle_deg)?);
    }
    Ok(())
}
