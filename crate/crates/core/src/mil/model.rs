use serde::{Deserialize, Serialize};

use super::heads::{backward_heads, forward_heads, HeadOutput};
use super::loss::{multitask_loss, LossParts, StudyTargets};
use super::params::{HeadConfig, MilParams, PoolingConfig};
use super::pooling::{pool_backward, pool_forward, PooledStudyState, StudyInput};
use crate::checkpoint::{Checkpoint, CheckpointKind};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Pooling module plus multi-task heads.
#[derive(Debug, Clone, PartialEq)]
pub struct MilModel {
    pub pooling: PoolingConfig,
    pub heads: HeadConfig,
    pub params: MilParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MilMeta {
    pooling: PoolingConfig,
    heads: HeadConfig,
    input_dim: usize,
    #[serde(default)]
    version: String,
}

impl MilModel {
    pub fn new(pooling: PoolingConfig, heads: HeadConfig, input_dim: usize) -> Result<Self> {
        pooling.validate()?;
        heads.validate()?;
        let params = MilParams::new(&pooling, input_dim);
        Ok(Self { pooling, heads, params })
    }

    pub fn pool(&self, input: &StudyInput) -> Result<PooledStudyState> {
        Ok(pool_forward(&self.params, &self.pooling, input, None)?.0)
    }

    /// Evaluation-mode forward pass.
    pub fn predict(&self, input: &StudyInput) -> Result<(PooledStudyState, HeadOutput)> {
        let (state, _) = pool_forward(&self.params, &self.pooling, input, None)?;
        let (out, _) = forward_heads(&state.embedding, &self.params.head_w, self.params.head_b.data(), None)?;
        Ok((state, out))
    }

    /// Mean loss over `batch` in evaluation mode.
    pub fn loss(&self, batch: &[(&StudyInput, &StudyTargets)]) -> Result<f64> {
        let mut total = 0.0;
        for (input, targets) in batch {
            let (_, out) = self.predict(input)?;
            total += multitask_loss(&out, targets, &self.heads, 1.0)?.0.total;
        }
        Ok(total / batch.len() as f64)
    }

    /// Mean loss and parameter gradients over `batch`. Dropout is active when
    /// `rng` is given. With `heads_only`, pooling gradients are not computed.
    pub fn loss_and_grad(
        &self,
        batch: &[(&StudyInput, &StudyTargets)],
        mut rng: Option<&mut Rng>,
        heads_only: bool,
    ) -> Result<(f64, MilParams)> {
        if batch.is_empty() {
            return Err(Error::EmptyStudy);
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grads = self.params.zeros_like();
        let mut total = 0.0;
        for (input, targets) in batch {
            let (state, pcache) = pool_forward(&self.params, &self.pooling, input, rng.as_deref_mut())?;
            let head_dropout = rng.as_deref_mut().map(|r| (r, self.heads.dropout));
            let (out, hcache) = forward_heads(&state.embedding, &self.params.head_w, self.params.head_b.data(), head_dropout)?;
            let (parts, d_raw): (LossParts, Vec<f64>) = multitask_loss(&out, targets, &self.heads, scale)?;
            total += parts.total * scale;
            let d_pooled = backward_heads(&self.params, &hcache, &d_raw, &mut grads)?;
            if !heads_only {
                pool_backward(&self.params, &self.pooling, &pcache, &d_pooled, &mut grads)?;
            }
        }
        if !total.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        Ok((total, grads))
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let meta = MilMeta {
            pooling: self.pooling.clone(),
            heads: self.heads.clone(),
            input_dim: self.params.input_dim(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        Checkpoint::from_params(CheckpointKind::MilModel, &meta, &self.params)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.kind != CheckpointKind::MilModel {
            return Err(Error::Checkpoint("not a pooling/heads checkpoint".into()));
        }
        let meta: MilMeta = ck.meta_as()?;
        let mut model = Self::new(meta.pooling, meta.heads, meta.input_dim)
            .map_err(|e| Error::Checkpoint(format!("metadata: {e}")))?;
        ck.load_into(&mut model.params)?;
        Ok(model)
    }
}
