use super::loss::StudyTargets;
use super::pooling::StudyInput;
use crate::acquisition::{classify_view, select_diagnostic, SelectionMode, ViewClass};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::study::{Cohort, StudyRecord, VideoRecord};

fn view_of(v: &VideoRecord) -> Result<ViewClass> {
    match v.view_class {
        Some(c) => Ok(c),
        None => classify_view(v.primary_angle_deg, v.secondary_angle_deg),
    }
}

/// Pooling input from a list of videos with resolvable embeddings.
pub fn videos_input(cohort: &Cohort, videos: &[VideoRecord]) -> Result<StudyInput> {
    let rows = videos.iter().map(|v| cohort.video_embedding(v)).collect::<Result<Vec<_>>>()?;
    let views = videos.iter().map(view_of).collect::<Result<Vec<_>>>()?;
    let mut input = StudyInput::new(DenseMatrix::from_rows(&rows)?);
    input.views = Some(views);
    Ok(input)
}

/// Selects up to `max_videos` diagnostic videos and builds the padded input.
pub fn study_input(cohort: &Cohort, study: &StudyRecord, max_videos: usize, mode: SelectionMode) -> Result<StudyInput> {
    let sel = select_diagnostic(study, max_videos, mode)?;
    Ok(videos_input(cohort, &sel.videos)?.padded(sel.mask.len()))
}

pub fn study_targets(study: &StudyRecord) -> Result<StudyTargets> {
    let labels = study
        .labels
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("study {} has no labels", study.study_id)))?;
    Ok(StudyTargets::from_labels(&labels.combined()))
}
