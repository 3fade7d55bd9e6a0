use serde::{Deserialize, Serialize};

use super::data::videos_input;
use super::model::MilModel;
use crate::acquisition::{select_diagnostic, SelectionMode};
use crate::error::{Error, Result};
use crate::stats::{auroc, micro_average, ScoredSample};
use crate::study::{BinaryTask, Cohort, Segment, Split, N_SEGMENTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Each video pooled alone, scored on its own territory's segments.
    SingleVideo,
    /// Mean of per-video probabilities over all selected videos of the study.
    StudyAverage,
    /// All selected videos pooled together.
    MultiVideoAttention,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::SingleVideo, Strategy::StudyAverage, Strategy::MultiVideoAttention];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::SingleVideo => "single_video",
            Strategy::StudyAverage => "study_average",
            Strategy::MultiVideoAttention => "multi_video_attention",
        }
    }
}

/// Scored samples for every task under every strategy.
#[derive(Debug, Clone, Default)]
pub struct AblationSamples {
    /// Indexed `[strategy][task]`.
    pub samples: [[Vec<ScoredSample>; 4]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskAblation {
    pub task: BinaryTask,
    /// Micro-averaged AUROC; `None` where a task has a single class.
    pub single_video: Option<f64>,
    pub study_average: Option<f64>,
    pub multi_video_attention: Option<f64>,
    pub n_video_samples: usize,
    pub n_study_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub n_studies: usize,
    pub tasks: Vec<TaskAblation>,
}

impl AblationReport {
    pub fn task(&self, task: BinaryTask) -> &TaskAblation {
        &self.tasks[task.index()]
    }
}

fn sample(patient: &str, seg: Segment, score: f64, label: bool) -> ScoredSample {
    ScoredSample { patient_id: patient.to_string(), segment: seg.id().to_string(), score, label }
}

/// Scores the studies of `split` with the three strategies.
pub fn ablation_samples(cohort: &Cohort, model: &MilModel, split: Split) -> Result<AblationSamples> {
    let mut out = AblationSamples::default();
    let max = model.pooling.max_videos;
    for study in cohort.studies_in(split) {
        let labels = study
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("study {} has no labels", study.study_id)))?
            .combined();
        let sel = select_diagnostic(study, max, SelectionMode::Inference)?;
        let full = videos_input(cohort, &sel.videos)?;
        let (_, pooled_out) = model.predict(&full)?;
        let per_video = (0..sel.videos.len())
            .map(|k| Ok(model.predict(&full.select(&[k]))?.1))
            .collect::<Result<Vec<_>>>()?;
        let targets = super::loss::StudyTargets::from_labels(&labels);
        for i in 0..N_SEGMENTS {
            let seg = Segment::from_index(i).expect("segment index");
            let territory = seg.territory(study.dominance);
            let own: Vec<usize> = (0..sel.videos.len())
                .filter(|&k| sel.videos[k].artery.territory() == Some(territory))
                .collect();
            if own.is_empty() {
                continue;
            }
            for task in BinaryTask::ALL {
                let label = targets.binary[task.index()][i];
                let t = task.index();
                for &k in &own {
                    out.samples[0][t].push(sample(&study.patient_id, seg, per_video[k].probability(task, i), label));
                }
                let mean = per_video.iter().map(|o| o.probability(task, i)).sum::<f64>() / per_video.len() as f64;
                out.samples[1][t].push(sample(&study.patient_id, seg, mean, label));
                out.samples[2][t].push(sample(&study.patient_id, seg, pooled_out.probability(task, i), label));
            }
        }
    }
    Ok(out)
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedAuroc) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Micro AUROC per task for single-video, study-average and pooled
/// predictions on the studies of `split`.
pub fn ablation_harness(cohort: &Cohort, model: &MilModel, split: Split) -> Result<AblationReport> {
    let s = ablation_samples(cohort, model, split)?;
    let n_studies = cohort.studies_in(split).count();
    if n_studies == 0 {
        return Err(Error::EmptyGroup(format!("no studies in split {split:?}")));
    }
    let tasks = BinaryTask::ALL
        .into_iter()
        .map(|task| {
            let t = task.index();
            Ok(TaskAblation {
                task,
                single_video: defined(micro_average(&s.samples[0][t], auroc))?,
                study_average: defined(micro_average(&s.samples[1][t], auroc))?,
                multi_video_attention: defined(micro_average(&s.samples[2][t], auroc))?,
                n_video_samples: s.samples[0][t].len(),
                n_study_samples: s.samples[2][t].len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationReport { n_studies, tasks })
}
