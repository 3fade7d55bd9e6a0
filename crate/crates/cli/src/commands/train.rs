use coro_core::contrastive::{build_pairs, projection_checkpoint, train_contrastive, ContrastiveConfig, RetrievalMetrics};
use coro_core::mil::{train_heads, HeadConfig, PoolingConfig, TrainConfig};
use coro_core::optim::AdamWConfig;
use coro_core::study::Split;
use serde::Serialize;

use super::{csv_string, load_cohort, load_model, out_dir, write_bytes, write_json};
use crate::args::{ContrastiveArgs, Global, HeadsArgs};
use crate::error::{CliError, Result};

#[derive(Serialize)]
struct ContrastiveSummary {
    config: ContrastiveConfig,
    epochs_run: usize,
    aborted: bool,
    final_loss: Option<f64>,
    train: RetrievalMetrics,
    val: Option<RetrievalMetrics>,
}

pub fn contrastive(g: &Global, a: &ContrastiveArgs) -> Result<()> {
    let cohort = load_cohort(g)?;
    let split = (!cohort.splits.is_empty()).then_some(Split::Train);
    let train = build_pairs(&cohort, split, g.seed)?;
    let config = ContrastiveConfig {
        loss_kind: a.loss,
        temperature: a.temperature,
        learning_rate: a.lr,
        weight_decay: a.weight_decay,
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed: g.seed,
        output_dim: a.output_dim,
        ..Default::default()
    };
    let run = train_contrastive(&train, &config)?;
    let val = match split {
        Some(_) => {
            let pairs = build_pairs(&cohort, Some(Split::Val), g.seed)?;
            (!pairs.is_empty()).then(|| pairs.evaluate(&run.params, true)).transpose()?
        }
        None => None,
    };
    let summary = ContrastiveSummary {
        epochs_run: run.history.len(),
        aborted: run.aborted,
        final_loss: run.history.last().map(|h| h.loss),
        train: train.evaluate(&run.params, true)?,
        val,
        config: config.clone(),
    };
    let dir = out_dir(g)?;
    write_bytes(&dir.join("projection.dcw"), &projection_checkpoint(&run.params, &config)?.to_bytes())?;
    let history = csv_string(|w| {
        w.write_record(["epoch", "loss"])?;
        for h in &run.history {
            w.write_record([h.epoch.to_string(), h.loss.to_string()])?;
        }
        Ok(())
    })?;
    write_bytes(&dir.join("loss_history.csv"), history.as_bytes())?;
    write_json(&dir.join("retrieval.json"), &summary)?;
    if run.aborted {
        log::warn!("training stopped early on a non-finite loss");
    }
    Ok(())
}

#[derive(Serialize)]
struct HeadsSummary {
    pooling: PoolingConfig,
    train: TrainConfig,
    best_epoch: Option<usize>,
    aborted: bool,
}

pub fn heads(g: &Global, a: &HeadsArgs) -> Result<()> {
    let cohort = load_cohort(g)?;
    let pooling = PoolingConfig {
        mode: a.pooling,
        num_heads: a.heads,
        hidden_dim: a.hidden,
        dropout: a.dropout,
        max_videos: a.max_videos,
        view_embedding: a.view_embedding,
        seed: g.seed,
    };
    let config = TrainConfig {
        optimizer: AdamWConfig { learning_rate: a.lr, weight_decay: a.weight_decay, ..Default::default() },
        epochs: a.epochs,
        batch_size: a.batch_size,
        freeze_pooling: a.freeze_pooling,
        seed: g.seed,
        ..Default::default()
    };
    let initial = match &g.checkpoint {
        Some(p) => Some(load_model(p)?.params),
        None if a.freeze_pooling => {
            return Err(CliError::Usage("--freeze-pooling needs --checkpoint with trained pooling weights".into()))
        }
        None => None,
    };
    let trained = train_heads(&cohort, &pooling, &HeadConfig::default(), &config, initial)?;
    let dir = out_dir(g)?;
    write_bytes(&dir.join("model.dcw"), &trained.model.to_checkpoint()?.to_bytes())?;
    let history = csv_string(|w| {
        w.write_record(["epoch", "lr", "train_loss", "val_loss"])?;
        for h in &trained.history {
            w.write_record([h.epoch.to_string(), h.lr.to_string(), h.train_loss.to_string(), h.val_loss.to_string()])?;
        }
        Ok(())
    })?;
    write_bytes(&dir.join("history.csv"), history.as_bytes())?;
    write_json(
        &dir.join("training.json"),
        &HeadsSummary { pooling, train: config, best_epoch: trained.best_epoch, aborted: trained.aborted },
    )?;
    if trained.aborted {
        log::warn!("training stopped early on a non-finite loss");
    }
    Ok(())
}
