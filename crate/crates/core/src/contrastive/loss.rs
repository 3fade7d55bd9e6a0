use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{norm, softmax, softplus, sigmoid, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Clip,
    Siglip,
    Infonce,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Clip, LossKind::Siglip, LossKind::Infonce];

    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Clip => "clip",
            LossKind::Siglip => "siglip",
            LossKind::Infonce => "infonce",
        }
    }

    pub fn min_batch(self) -> usize {
        match self {
            LossKind::Siglip => 1,
            _ => 2,
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown loss kind '{s}'")))
    }
}

/// Learned SigLIP logit parameters: logits are `exp(log_scale)·s + bias`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiglipParams {
    pub log_scale: f64,
    pub bias: f64,
}

/// Loss value and its gradient with respect to the similarity matrix.
#[derive(Debug, Clone)]
pub struct SimilarityLoss {
    pub loss: f64,
    pub grad_sim: DenseMatrix,
    pub grad_log_scale: f64,
    pub grad_bias: f64,
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub grad_video: DenseMatrix,
    pub grad_text: DenseMatrix,
    pub grad_log_scale: f64,
    pub grad_bias: f64,
}

fn cross_entropy_rows(logits: &DenseMatrix, grad: &mut DenseMatrix) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..logits.rows() {
        let row = logits.row(i);
        total += log_sum_exp(row) - row[i];
        let p = softmax(row, None)?;
        for (j, pj) in p.iter().enumerate() {
            grad.row_mut(i)[j] += pj - if i == j { 1.0 } else { 0.0 };
        }
    }
    Ok(total)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Loss as a function of the `B×B` similarity matrix `s[i][j] = v_i·t_j`.
pub fn loss_from_similarity(
    kind: LossKind,
    sim: &DenseMatrix,
    temperature: f64,
    siglip: SiglipParams,
) -> Result<SimilarityLoss> {
    let b = sim.rows();
    if sim.cols() != b {
        return Err(Error::DimensionMismatch(format!("similarity matrix {}x{}", b, sim.cols())));
    }
    if b == 0 {
        return Err(Error::EmptyCandidates);
    }
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument("temperature must be > 0".into()));
    }
    let bf = b as f64;
    let mut grad = DenseMatrix::zeros(b, b);
    match kind {
        LossKind::Clip | LossKind::Infonce => {
            let mut logits = sim.clone();
            logits.scale(1.0 / temperature);
            let mut g_rows = DenseMatrix::zeros(b, b);
            let row_loss = cross_entropy_rows(&logits, &mut g_rows)? / bf;
            let (loss, weight) = if kind == LossKind::Clip {
                let mut g_cols = DenseMatrix::zeros(b, b);
                let col_loss = cross_entropy_rows(&logits.transpose(), &mut g_cols)? / bf;
                g_rows.add_assign(&g_cols.transpose());
                (0.5 * (row_loss + col_loss), 0.5)
            } else {
                (row_loss, 1.0)
            };
            for (g, r) in grad.data_mut().iter_mut().zip(g_rows.data()) {
                *g = weight * r / (bf * temperature);
            }
            Ok(SimilarityLoss { loss, grad_sim: grad, grad_log_scale: 0.0, grad_bias: 0.0 })
        }
        LossKind::Siglip => {
            let t = siglip.log_scale.exp();
            let n = bf * bf;
            let (mut loss, mut d_t, mut d_b) = (0.0, 0.0, 0.0);
            for i in 0..b {
                for j in 0..b {
                    let z = if i == j { 1.0 } else { -1.0 };
                    let logit = t * sim[(i, j)] + siglip.bias;
                    loss += softplus(-z * logit);
                    let dl = -z * sigmoid(-z * logit) / n;
                    grad.row_mut(i)[j] = dl * t;
                    d_t += dl * sim[(i, j)];
                    d_b += dl;
                }
            }
            Ok(SimilarityLoss { loss: loss / n, grad_sim: grad, grad_log_scale: d_t * t, grad_bias: d_b })
        }
    }
}

pub(crate) fn check_normalized(m: &DenseMatrix) -> Result<()> {
    for i in 0..m.rows() {
        let n = norm(m.row(i));
        if !((n - 1.0).abs() <= 1e-6) {
            return Err(Error::UnnormalizedInput { row: i, norm: n });
        }
    }
    Ok(())
}

/// Contrastive loss over L2-normalized video and text rows, with gradients
/// with respect to both embedding matrices and the SigLIP parameters.
pub fn contrastive_loss(
    kind: LossKind,
    video: &DenseMatrix,
    text: &DenseMatrix,
    temperature: f64,
    siglip: SiglipParams,
) -> Result<LossOutput> {
    if video.shape() != text.shape() {
        return Err(Error::DimensionMismatch(format!("video {:?} vs text {:?}", video.shape(), text.shape())));
    }
    check_normalized(video)?;
    check_normalized(text)?;
    let sim = video.matmul_nt(text)?;
    let sl = loss_from_similarity(kind, &sim, temperature, siglip)?;
    if !sl.loss.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    Ok(LossOutput {
        loss: sl.loss,
        grad_video: sl.grad_sim.matmul(text)?,
        grad_text: sl.grad_sim.matmul_tn(video)?,
        grad_log_scale: sl.grad_log_scale,
        grad_bias: sl.grad_bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const NEUTRAL: SiglipParams = SiglipParams { log_scale: 0.0, bias: 0.0 };

    #[test]
    fn closed_forms() {
        let id = DenseMatrix::identity(2);
        let clip = loss_from_similarity(LossKind::Clip, &id, 1.0, NEUTRAL).unwrap().loss;
        assert!((clip - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-12);
        let zero = DenseMatrix::zeros(2, 2);
        let sig = loss_from_similarity(LossKind::Siglip, &zero, 1.0, NEUTRAL).unwrap().loss;
        assert!((sig - 2f64.ln()).abs() < 1e-12);
        let eq = DenseMatrix::from_rows(&[vec![0.3, 0.3], vec![0.3, 0.3]]).unwrap();
        let nce = loss_from_similarity(LossKind::Infonce, &eq, 0.07, NEUTRAL).unwrap().loss;
        assert!((nce - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn clip_single_pair_is_zero() {
        for s in [0.4, -0.9, 1.0] {
            let one = DenseMatrix::from_rows(&[vec![s]]).unwrap();
            let out = loss_from_similarity(LossKind::Clip, &one, 0.07, NEUTRAL).unwrap();
            assert_eq!(out.loss, 0.0);
            assert_eq!(out.grad_sim.data(), &[0.0]);
        }
    }

    #[test]
    fn rejects_unnormalized_rows() {
        let v = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let t = DenseMatrix::identity(2);
        assert!(matches!(
            contrastive_loss(LossKind::Clip, &v, &t, 0.1, NEUTRAL),
            Err(Error::UnnormalizedInput { row: 1, .. })
        ));
    }
}
