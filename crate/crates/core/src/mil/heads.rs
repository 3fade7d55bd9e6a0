use serde::{Deserialize, Serialize};

use super::params::{MilParams, HEAD_OUTPUTS};
use crate::error::{Error, Result};
use crate::numerics::{sigmoid, Rng};
use crate::study::{BinaryTask, N_SEGMENTS};

/// Raw head outputs for one study. Block 0 is stenosis as a fraction of
/// 100 percent; blocks 1..=4 are logits in [`BinaryTask`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadOutput {
    pub raw: Vec<f64>,
}

impl HeadOutput {
    /// Unclamped stenosis estimate in percent.
    pub fn stenosis_pct_raw(&self, segment: usize) -> f64 {
        100.0 * self.raw[segment]
    }

    pub fn logit(&self, task: BinaryTask, segment: usize) -> f64 {
        self.raw[(1 + task.index()) * N_SEGMENTS + segment]
    }

    pub fn probability(&self, task: BinaryTask, segment: usize) -> f64 {
        sigmoid(self.logit(task, segment))
    }
}

/// Cached values for the head backward pass.
#[derive(Debug, Clone)]
pub struct HeadCache {
    input: Vec<f64>,
    mask: Option<Vec<f64>>,
}

/// Affine heads over the pooled vector, with inverted dropout on the input
/// when `dropout` supplies a random stream.
pub fn forward_heads(
    pooled: &[f64],
    weight: &crate::numerics::DenseMatrix,
    bias: &[f64],
    dropout: Option<(&mut Rng, f64)>,
) -> Result<(HeadOutput, HeadCache)> {
    if pooled.len() != weight.rows() {
        return Err(Error::DimensionMismatch(format!("pooled width {} vs heads {}", pooled.len(), weight.rows())));
    }
    if bias.len() != weight.cols() {
        return Err(Error::LengthMismatch(bias.len(), weight.cols()));
    }
    let (input, mask) = match dropout {
        Some((rng, p)) if p > 0.0 => {
            let keep = 1.0 - p;
            let m: Vec<f64> = (0..pooled.len()).map(|_| if rng.bernoulli(keep) { 1.0 / keep } else { 0.0 }).collect();
            (pooled.iter().zip(&m).map(|(x, s)| x * s).collect::<Vec<_>>(), Some(m))
        }
        _ => (pooled.to_vec(), None),
    };
    let mut raw = weight.vec_mul(&input)?;
    raw.iter_mut().zip(bias).for_each(|(r, b)| *r += b);
    Ok((HeadOutput { raw }, HeadCache { input, mask }))
}

/// Accumulates head gradients and returns `d loss / d pooled`.
pub fn backward_heads(params: &MilParams, cache: &HeadCache, d_raw: &[f64], grads: &mut MilParams) -> Result<Vec<f64>> {
    if d_raw.len() != HEAD_OUTPUTS {
        return Err(Error::LengthMismatch(d_raw.len(), HEAD_OUTPUTS));
    }
    let p = cache.input.len();
    for (i, x) in cache.input.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (g, d) in grads.head_w.row_mut(i).iter_mut().zip(d_raw) {
            *g += x * d;
        }
    }
    grads.head_b.data_mut().iter_mut().zip(d_raw).for_each(|(g, d)| *g += d);
    let mut d_in: Vec<f64> = (0..p).map(|i| params.head_w.row(i).iter().zip(d_raw).map(|(w, d)| w * d).sum()).collect();
    if let Some(m) = &cache.mask {
        d_in.iter_mut().zip(m).for_each(|(d, s)| *d *= s);
    }
    Ok(d_in)
}
