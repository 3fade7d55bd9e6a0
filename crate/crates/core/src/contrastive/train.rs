use serde::{Deserialize, Serialize};

use super::loss::{contrastive_loss, LossKind};
use super::projection::{ProjectionPair, ProjectionShape};
use super::retrieval::{dedup_rows, retrieval_eval, RetrievalMetrics};
use super::text_stub::hash_text_embedding;
use crate::acquisition::pair_videos_reports;
use crate::checkpoint::{Checkpoint, CheckpointKind};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Rng};
use crate::optim::{AdamW, AdamWConfig, Parameters};
use crate::study::{Cohort, Split, Territory};
use crate::EMBED_DIM;

pub const TEMPERATURE_RANGE: (f64, f64) = (0.06, 0.11);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveConfig {
    pub loss_kind: LossKind,
    pub temperature: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    #[serde(default = "default_output_dim")]
    pub output_dim: usize,
    /// Accept temperatures outside the usual sweep range.
    #[serde(default)]
    pub allow_any_temperature: bool,
}

fn default_output_dim() -> usize {
    EMBED_DIM
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        Self {
            loss_kind: LossKind::Clip,
            temperature: 0.11,
            learning_rate: 3e-3,
            weight_decay: 0.1,
            batch_size: 40,
            epochs: 300,
            seed: 0,
            output_dim: EMBED_DIM,
            allow_any_temperature: false,
        }
    }
}

impl ContrastiveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.temperature > 0.0) {
            return bad("temperature must be > 0".into());
        }
        let (lo, hi) = TEMPERATURE_RANGE;
        if !self.allow_any_temperature && !(lo..=hi).contains(&self.temperature) {
            return bad(format!("temperature {} outside [{lo}, {hi}]", self.temperature));
        }
        if self.batch_size < self.loss_kind.min_batch() {
            return bad(format!("{} needs batch_size >= {}", self.loss_kind.as_str(), self.loss_kind.min_batch()));
        }
        if !(self.learning_rate > 0.0) || !(self.weight_decay >= 0.0) {
            return bad("learning_rate must be > 0 and weight_decay >= 0".into());
        }
        if self.output_dim == 0 {
            return bad("output_dim must be positive".into());
        }
        Ok(())
    }
}

/// One contrastive item per study territory: the mean of its diagnostic
/// video embeddings and the embedding of its report.
#[derive(Debug, Clone)]
pub struct ContrastivePairs {
    pub video: DenseMatrix,
    pub text: DenseMatrix,
    pub study_ids: Vec<String>,
    pub territories: Vec<Territory>,
    pub reports: Vec<String>,
}

impl ContrastivePairs {
    pub fn len(&self) -> usize {
        self.video.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.video.rows() == 0
    }

    /// Retrieval metrics after projection. With `dedup`, identical report
    /// texts form a single candidate.
    pub fn evaluate(&self, params: &ProjectionPair, dedup: bool) -> Result<RetrievalMetrics> {
        let v = params.embed_videos(&self.video)?;
        let t = params.embed_texts(&self.text)?;
        let (cands, pairing) = if dedup {
            dedup_rows(&t, &self.reports)?
        } else {
            let n = t.rows();
            (t, (0..n).collect())
        };
        retrieval_eval(&v, &cands, &pairing, Some(&self.study_ids))
    }
}

/// Builds territory pairs for the studies of `split` (all studies if `None`).
/// Text embeddings come from the cohort's text store when present and from
/// the hashing stub otherwise.
pub fn build_pairs(cohort: &Cohort, split: Option<Split>, text_seed: u64) -> Result<ContrastivePairs> {
    let mut video_rows = Vec::new();
    let mut text_rows = Vec::new();
    let (mut study_ids, mut territories, mut reports) = (Vec::new(), Vec::new(), Vec::new());
    for study in &cohort.studies {
        if let Some(s) = split {
            if cohort.splits.get(&study.patient_id) != Some(&s) {
                continue;
            }
        }
        for pair in pair_videos_reports(study)? {
            let mut mean = vec![0.0; EMBED_DIM];
            for v in &pair.videos {
                for (m, x) in mean.iter_mut().zip(cohort.video_embedding(v)?) {
                    *m += x;
                }
            }
            mean.iter_mut().for_each(|m| *m /= pair.videos.len() as f64);
            let text = match (&cohort.texts, &study.text_embedding_refs) {
                (Some(store), Some(refs)) => store.get_f64(refs.get(pair.territory))?,
                _ => hash_text_embedding(&pair.report, EMBED_DIM, text_seed)?,
            };
            video_rows.push(mean);
            text_rows.push(text);
            study_ids.push(study.study_id.clone());
            territories.push(pair.territory);
            reports.push(pair.report);
        }
    }
    if video_rows.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    Ok(ContrastivePairs {
        video: DenseMatrix::from_rows(&video_rows)?,
        text: DenseMatrix::from_rows(&text_rows)?,
        study_ids,
        territories,
        reports,
    })
}

/// Loss and parameter gradients for one batch of raw (unprojected) inputs.
pub fn contrastive_objective(
    params: &ProjectionPair,
    video_x: &DenseMatrix,
    text_x: &DenseMatrix,
    kind: LossKind,
    temperature: f64,
) -> Result<(f64, ProjectionPair)> {
    let vc = params.video.forward(video_x)?;
    let tc = params.text.forward(text_x)?;
    let out = contrastive_loss(kind, &vc.normalized, &tc.normalized, temperature, params.siglip_params())?;
    let mut grads = params.zeros_like();
    params.video.backward(video_x, &vc, &out.grad_video, &mut grads.video)?;
    params.text.backward(text_x, &tc, &out.grad_text, &mut grads.text)?;
    grads.siglip.data_mut().copy_from_slice(&[out.grad_log_scale, out.grad_bias]);
    Ok((out.loss, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct ContrastiveRun {
    pub params: ProjectionPair,
    pub history: Vec<EpochLoss>,
    /// Set when training stopped on a non-finite loss; `params` then holds
    /// the last finite state.
    pub aborted: bool,
}

/// Minibatch AdamW training of the projection pair.
pub fn train_contrastive(pairs: &ContrastivePairs, config: &ContrastiveConfig) -> Result<ContrastiveRun> {
    config.validate()?;
    if pairs.len() < config.loss_kind.min_batch() {
        return Err(Error::EmptyCandidates);
    }
    let shape = ProjectionShape {
        video_dim: pairs.video.cols(),
        text_dim: pairs.text.cols(),
        output_dim: config.output_dim,
    };
    let mut params = ProjectionPair::new(shape, config.temperature, config.seed);
    let opt_config = AdamWConfig {
        learning_rate: config.learning_rate,
        weight_decay: config.weight_decay,
        ..Default::default()
    };
    let mut opt = AdamW::new(opt_config, params.n_params());
    let mut history = Vec::with_capacity(config.epochs);
    let n = pairs.len();
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        Rng::stream(config.seed, 1 + epoch as u64).shuffle(&mut order);
        let (mut sum, mut count) = (0.0, 0usize);
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < config.loss_kind.min_batch() {
                continue;
            }
            let vx = pairs.video.select_rows(chunk);
            let tx = pairs.text.select_rows(chunk);
            let step = contrastive_objective(&params, &vx, &tx, config.loss_kind, config.temperature);
            let (loss, grads) = match step {
                Ok(v) => v,
                Err(Error::NonFiniteObjective) | Err(Error::NonFinite(_)) => {
                    return Ok(ContrastiveRun { params, history, aborted: true });
                }
                Err(e) => return Err(e),
            };
            let before = params.clone();
            if opt.step(&mut params, &grads, config.learning_rate).is_err() || !params.is_finite() {
                return Ok(ContrastiveRun { params: before, history, aborted: true });
            }
            sum += loss * chunk.len() as f64;
            count += chunk.len();
        }
        history.push(EpochLoss { epoch, loss: sum / count as f64 });
    }
    Ok(ContrastiveRun { params, history, aborted: false })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProjectionMeta {
    config: ContrastiveConfig,
    shape: ProjectionShape,
}

pub fn projection_checkpoint(params: &ProjectionPair, config: &ContrastiveConfig) -> Result<Checkpoint> {
    let meta = ProjectionMeta { config: config.clone(), shape: params.shape() };
    Checkpoint::from_params(CheckpointKind::Projection, &meta, params)
}

pub fn projection_from_checkpoint(ck: &Checkpoint) -> Result<(ProjectionPair, ContrastiveConfig)> {
    if ck.kind != CheckpointKind::Projection {
        return Err(Error::Checkpoint("not a projection checkpoint".into()));
    }
    let meta: ProjectionMeta = ck.meta_as()?;
    let mut params = ProjectionPair::new(meta.shape, meta.config.temperature, 0);
    ck.load_into(&mut params)?;
    Ok((params, meta.config))
}
