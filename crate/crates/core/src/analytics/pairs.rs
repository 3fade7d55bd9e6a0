use std::collections::BTreeMap;

use super::progression::StudyPairObservation;
use crate::acquisition::{assign_phases, Phase};
use crate::error::{Error, Result};
use crate::study::{Cohort, StudyRecord};

/// Mean embedding of the study's videos in the given phase. Falls back to
/// all videos when none are in that phase.
pub fn mean_phase_embedding(cohort: &Cohort, study: &StudyRecord, phase: Phase) -> Result<Vec<f64>> {
    let mut s = study.clone();
    if s.videos.iter().any(|v| v.phase.is_none()) {
        assign_phases(&mut s)?;
    }
    let chosen: Vec<_> = s.videos.iter().filter(|v| v.phase == Some(phase)).collect();
    let chosen = if chosen.is_empty() { s.videos.iter().collect() } else { chosen };
    if chosen.is_empty() {
        return Err(Error::EmptyStudy);
    }
    let mut acc: Option<Vec<f64>> = None;
    for v in &chosen {
        let e = cohort.video_embedding(v)?;
        match acc.as_mut() {
            None => acc = Some(e),
            Some(a) => a.iter_mut().zip(&e).for_each(|(x, y)| *x += y),
        }
    }
    let mut a = acc.expect("non-empty");
    let k = chosen.len() as f64;
    a.iter_mut().for_each(|x| *x /= k);
    Ok(a)
}

/// Whether the study contains any interventional acquisition.
pub fn has_intervention(study: &StudyRecord) -> Result<bool> {
    let mut s = study.clone();
    assign_phases(&mut s)?;
    Ok(s.videos.iter().any(|v| v.phase == Some(Phase::Interventional)))
}

/// Consecutive study pairs per patient, ordered by study time. The earlier
/// study is represented by its post-procedural videos when it had an
/// intervention, the later one by its diagnostic videos. Studies without
/// labels are skipped.
pub fn consecutive_pairs(cohort: &Cohort) -> Result<Vec<StudyPairObservation>> {
    let mut by_patient: BTreeMap<&str, Vec<&StudyRecord>> = BTreeMap::new();
    for s in cohort.studies.iter().filter(|s| s.labels.is_some()) {
        by_patient.entry(s.patient_id.as_str()).or_default().push(s);
    }
    let mut out = Vec::new();
    for (pid, mut studies) in by_patient {
        studies.sort_by(|a, b| a.performed_at.total_cmp(&b.performed_at).then(a.study_id.cmp(&b.study_id)));
        for w in studies.windows(2) {
            let (a, b) = (w[0], w[1]);
            let pci = has_intervention(a)?;
            let phase = if pci { Phase::PostProcedural } else { Phase::Diagnostic };
            out.push(StudyPairObservation {
                patient_id: pid.to_string(),
                earlier_study: a.study_id.clone(),
                later_study: b.study_id.clone(),
                earlier_embedding: mean_phase_embedding(cohort, a, phase)?,
                later_embedding: mean_phase_embedding(cohort, b, Phase::Diagnostic)?,
                earlier_labels: a.labels.as_ref().expect("filtered").combined(),
                later_labels: b.labels.as_ref().expect("filtered").combined(),
                pci_between: pci,
            });
        }
    }
    Ok(out)
}
