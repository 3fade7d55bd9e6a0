use serde::{Deserialize, Serialize};

use super::data::{study_input, study_targets};
use super::loss::StudyTargets;
use super::model::MilModel;
use super::params::{HeadConfig, MilParams, PoolingConfig, HEAD_TENSORS};
use super::pooling::StudyInput;
use crate::acquisition::SelectionMode;
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::optim::{AdamW, AdamWConfig, CosineWarmRestarts, Parameters};
use crate::study::{Cohort, Split};
use crate::EMBED_DIM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: AdamWConfig,
    pub epochs: usize,
    pub batch_size: usize,
    /// First warm-restart cycle length in epochs.
    pub restart_epochs: f64,
    pub restart_mult: f64,
    pub min_lr: f64,
    /// Train the heads only and keep the pooling module fixed.
    pub freeze_pooling: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: AdamWConfig { learning_rate: 1e-3, weight_decay: 1e-2, ..Default::default() },
            epochs: 50,
            batch_size: 16,
            restart_epochs: 10.0,
            restart_mult: 2.0,
            min_lr: 1e-5,
            freeze_pooling: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedMil {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: MilModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    /// Set when a non-finite loss stopped training early.
    pub aborted: bool,
}

/// Prepared inputs and targets for one split.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub study_ids: Vec<String>,
    pub patient_ids: Vec<String>,
    pub inputs: Vec<StudyInput>,
    pub targets: Vec<StudyTargets>,
}

impl SplitData {
    pub fn build(cohort: &Cohort, split: Split, max_videos: usize, selection_seed: Option<u64>) -> Result<Self> {
        let mut out = SplitData { study_ids: vec![], patient_ids: vec![], inputs: vec![], targets: vec![] };
        for (i, study) in cohort.studies_in(split).enumerate() {
            let mode = match selection_seed {
                Some(seed) => SelectionMode::Training { seed: seed.wrapping_add(i as u64) },
                None => SelectionMode::Inference,
            };
            out.inputs.push(study_input(cohort, study, max_videos, mode)?);
            out.targets.push(study_targets(study)?);
            out.study_ids.push(study.study_id.clone());
            out.patient_ids.push(study.patient_id.clone());
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn batch(&self, idx: &[usize]) -> Vec<(&StudyInput, &StudyTargets)> {
        idx.iter().map(|&i| (&self.inputs[i], &self.targets[i])).collect()
    }

    fn all(&self) -> Vec<(&StudyInput, &StudyTargets)> {
        self.inputs.iter().zip(&self.targets).collect()
    }
}

/// Trains pooling and heads on the cohort's train split, selecting the
/// epoch with the lowest validation loss.
pub fn train_heads(
    cohort: &Cohort,
    pooling: &PoolingConfig,
    heads: &HeadConfig,
    config: &TrainConfig,
    initial: Option<MilParams>,
) -> Result<TrainedMil> {
    let train = SplitData::build(cohort, Split::Train, pooling.max_videos, Some(config.seed))?;
    let val = SplitData::build(cohort, Split::Val, pooling.max_videos, None)?;
    train_on(&train, &val, pooling, heads, config, initial)
}

pub fn train_on(
    train: &SplitData,
    val: &SplitData,
    pooling: &PoolingConfig,
    heads: &HeadConfig,
    config: &TrainConfig,
    initial: Option<MilParams>,
) -> Result<TrainedMil> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidArgument("train and validation splits must both be non-empty".into()));
    }
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::InvalidConfig("batch_size and epochs must be positive".into()));
    }
    let input_dim = train.inputs[0].videos.cols();
    let mut model = MilModel::new(pooling.clone(), heads.clone(), input_dim)?;
    if input_dim != EMBED_DIM {
        log::debug!("training on {input_dim}-d inputs");
    }
    if let Some(p) = initial {
        if p.n_params() != model.params.n_params() {
            return Err(Error::DimensionMismatch("initial parameters do not match the configuration".into()));
        }
        model.params = p;
    }
    let initial_params = model.params.clone();
    let schedule = CosineWarmRestarts::new(
        config.optimizer.learning_rate,
        config.min_lr.min(config.optimizer.learning_rate),
        config.restart_epochs,
        config.restart_mult,
    )?;
    let mut opt = AdamW::new(config.optimizer, model.params.n_params());
    let frozen: Vec<usize> = if config.freeze_pooling {
        (0..model.params.tensors().len()).filter(|i| !HEAD_TENSORS.contains(i)).collect()
    } else {
        Vec::new()
    };
    let n = train.len();
    let steps_per_epoch = n.div_ceil(config.batch_size);
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, MilParams)> = None;
    let mut aborted = false;
    'epochs: for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        Rng::stream(config.seed, 1 + epoch as u64).shuffle(&mut order);
        let mut dropout_rng = Rng::stream(config.seed, 1 << 32 | epoch as u64);
        let (mut sum, mut lr) = (0.0, schedule.lr(epoch as f64));
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            lr = schedule.lr(epoch as f64 + b as f64 / steps_per_epoch as f64);
            let batch = train.batch(chunk);
            let (loss, grads) = match model.loss_and_grad(&batch, Some(&mut dropout_rng), config.freeze_pooling) {
                Ok(v) => v,
                Err(Error::NonFiniteObjective) | Err(Error::NonFinite(_)) => {
                    aborted = true;
                    break 'epochs;
                }
                Err(e) => return Err(e),
            };
            if opt.step_partial(&mut model.params, &grads, lr, &frozen).is_err() || !model.params.is_finite() {
                aborted = true;
                break 'epochs;
            }
            sum += loss * chunk.len() as f64;
        }
        let val_loss = match model.loss(&val.all()) {
            Ok(v) if v.is_finite() => v,
            Ok(_) | Err(Error::NonFinite(_)) => {
                aborted = true;
                break;
            }
            Err(e) => return Err(e),
        };
        history.push(EpochRecord { epoch, lr, train_loss: sum / n as f64, val_loss });
        if best.as_ref().map_or(true, |(b, _, _)| val_loss < *b) {
            best = Some((val_loss, epoch, model.params.clone()));
        }
    }
    let best_epoch = best.as_ref().map(|b| b.1);
    model.params = match best {
        Some((_, _, p)) => p,
        None => initial_params,
    };
    Ok(TrainedMil { model, history, best_epoch, aborted })
}
