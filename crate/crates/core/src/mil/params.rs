use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Rng};
use crate::optim::Parameters;
use crate::study::N_SEGMENTS;
use crate::{EMBED_DIM, MAX_VIDEOS};

/// Outputs per segment: stenosis regression plus four logit sets.
pub const HEAD_BLOCKS: usize = 5;
pub const HEAD_OUTPUTS: usize = HEAD_BLOCKS * N_SEGMENTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingMode {
    AttentionCls,
    GatedAttention,
    Mean,
    Max,
    HybridAttentionCls,
    HybridMeanCls,
    TwoStageCls,
}

impl PoolingMode {
    pub const ALL: [PoolingMode; 7] = [
        PoolingMode::AttentionCls,
        PoolingMode::GatedAttention,
        PoolingMode::Mean,
        PoolingMode::Max,
        PoolingMode::HybridAttentionCls,
        PoolingMode::HybridMeanCls,
        PoolingMode::TwoStageCls,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PoolingMode::AttentionCls => "attention_cls",
            PoolingMode::GatedAttention => "gated_attention",
            PoolingMode::Mean => "mean",
            PoolingMode::Max => "max",
            PoolingMode::HybridAttentionCls => "hybrid_attention_cls",
            PoolingMode::HybridMeanCls => "hybrid_mean_cls",
            PoolingMode::TwoStageCls => "two_stage_cls",
        }
    }

    pub fn is_hybrid(self) -> bool {
        matches!(self, PoolingMode::HybridAttentionCls | PoolingMode::HybridMeanCls)
    }
}

impl std::str::FromStr for PoolingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PoolingMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown pooling mode '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolingConfig {
    pub mode: PoolingMode,
    pub num_heads: usize,
    pub hidden_dim: usize,
    /// Dropout on the per-video value projections during training.
    pub dropout: f64,
    pub max_videos: usize,
    /// Adds a learned per-view-class vector to each video embedding.
    #[serde(default)]
    pub view_embedding: bool,
    pub seed: u64,
}

impl Default for PoolingConfig {
    fn default() -> Self {
        Self {
            mode: PoolingMode::AttentionCls,
            num_heads: 8,
            hidden_dim: EMBED_DIM,
            dropout: 0.15,
            max_videos: MAX_VIDEOS,
            view_embedding: false,
            seed: 0,
        }
    }
}

impl PoolingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.hidden_dim == 0 || self.num_heads == 0 {
            return bad("hidden_dim and num_heads must be positive".into());
        }
        if self.hidden_dim % self.num_heads != 0 {
            return bad(format!("num_heads {} does not divide hidden_dim {}", self.num_heads, self.hidden_dim));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} not in [0, 1)", self.dropout));
        }
        if self.max_videos == 0 {
            return bad("max_videos must be positive".into());
        }
        Ok(())
    }

    pub fn pooled_dim(&self) -> usize {
        if self.mode.is_hybrid() {
            2 * self.hidden_dim
        } else {
            self.hidden_dim
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub stenosis_weight: f64,
    /// Weights for the stenosis, calcification, thrombus and CTO logit heads.
    pub binary_weights: [f64; 4],
    pub huber_delta: f64,
    pub dropout: f64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        Self { stenosis_weight: 2.0, binary_weights: [1.0; 4], huber_delta: 1.0, dropout: 0.2 }
    }
}

impl HeadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stenosis_weight > 0.0) || self.binary_weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidConfig("loss weights must be > 0".into()));
        }
        if !(self.huber_delta > 0.0) {
            return Err(Error::InvalidConfig("huber_delta must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!("head dropout {} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

/// Every trainable tensor of the pooling module and the heads. Tensors that
/// the configured mode does not use stay at their initial values.
#[derive(Debug, Clone, PartialEq)]
pub struct MilParams {
    /// Value projection, `d_in × H`.
    pub w_v: DenseMatrix,
    pub b_v: DenseMatrix,
    /// Key projection for CLS attention, `d_in × H`.
    pub w_k: DenseMatrix,
    pub b_k: DenseMatrix,
    /// Learned CLS query, `1 × H`.
    pub cls: DenseMatrix,
    /// Gated attention `V`, `U` (`H × H`) and `w` (`1 × H`).
    pub gate_v: DenseMatrix,
    pub gate_u: DenseMatrix,
    pub gate_w: DenseMatrix,
    /// Within-video token query for two-stage pooling, `1 × d_in`.
    pub token_query: DenseMatrix,
    /// Per-view-class offsets, `12 × d_in`.
    pub view_embed: DenseMatrix,
    /// Heads, `P × 90` and `1 × 90`; column block `b` holds head `b`.
    pub head_w: DenseMatrix,
    pub head_b: DenseMatrix,
}

pub const HEAD_TENSORS: [usize; 2] = [10, 11];

fn gaussian(rows: usize, cols: usize, sd: f64, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| sd * rng.normal()).expect("finite init")
}

impl MilParams {
    pub fn new(config: &PoolingConfig, input_dim: usize) -> Self {
        let mut rng = Rng::stream(config.seed, 0);
        let h = config.hidden_dim;
        let p = config.pooled_dim();
        let din = 1.0 / (input_dim as f64).sqrt();
        let dh = 1.0 / (h as f64).sqrt();
        Self {
            w_v: gaussian(input_dim, h, din, &mut rng),
            b_v: DenseMatrix::zeros(1, h),
            w_k: gaussian(input_dim, h, din, &mut rng),
            b_k: DenseMatrix::zeros(1, h),
            cls: gaussian(1, h, 1.0, &mut rng),
            gate_v: gaussian(h, h, dh, &mut rng),
            gate_u: gaussian(h, h, dh, &mut rng),
            gate_w: gaussian(1, h, dh, &mut rng),
            token_query: gaussian(1, input_dim, 1.0, &mut rng),
            view_embed: DenseMatrix::zeros(12, input_dim),
            head_w: gaussian(p, HEAD_OUTPUTS, 0.1 / (p as f64).sqrt(), &mut rng),
            head_b: DenseMatrix::zeros(1, HEAD_OUTPUTS),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_v.rows()
    }

    pub fn zeros_like(&self) -> Self {
        let z = |m: &DenseMatrix| DenseMatrix::zeros(m.rows(), m.cols());
        Self {
            w_v: z(&self.w_v),
            b_v: z(&self.b_v),
            w_k: z(&self.w_k),
            b_k: z(&self.b_k),
            cls: z(&self.cls),
            gate_v: z(&self.gate_v),
            gate_u: z(&self.gate_u),
            gate_w: z(&self.gate_w),
            token_query: z(&self.token_query),
            view_embed: z(&self.view_embed),
            head_w: z(&self.head_w),
            head_b: z(&self.head_b),
        }
    }
}

impl Parameters for MilParams {
    fn tensors(&self) -> Vec<&DenseMatrix> {
        vec![
            &self.w_v,
            &self.b_v,
            &self.w_k,
            &self.b_k,
            &self.cls,
            &self.gate_v,
            &self.gate_u,
            &self.gate_w,
            &self.token_query,
            &self.view_embed,
            &self.head_w,
            &self.head_b,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        vec![
            &mut self.w_v,
            &mut self.b_v,
            &mut self.w_k,
            &mut self.b_k,
            &mut self.cls,
            &mut self.gate_v,
            &mut self.gate_u,
            &mut self.gate_w,
            &mut self.token_query,
            &mut self.view_embed,
            &mut self.head_w,
            &mut self.head_b,
        ]
    }
}
