use serde::{Deserialize, Serialize};

use super::loss::SiglipParams;
use crate::error::{Error, Result};
use crate::numerics::{norm, DenseMatrix, Rng};
use crate::optim::Parameters;

/// Affine map followed by L2 normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionHead {
    /// `input_dim × output_dim`
    pub weight: DenseMatrix,
    /// `1 × output_dim`
    pub bias: DenseMatrix,
}

/// Values kept from the forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ProjectionCache {
    pub normalized: DenseMatrix,
    norms: Vec<f64>,
}

impl ProjectionHead {
    pub fn new(input_dim: usize, output_dim: usize, rng: &mut Rng) -> Self {
        let sd = 1.0 / (input_dim as f64).sqrt();
        let data = (0..input_dim * output_dim).map(|_| sd * rng.normal()).collect();
        Self {
            weight: DenseMatrix::new(input_dim, output_dim, data).expect("finite init"),
            bias: DenseMatrix::zeros(1, output_dim),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weight: DenseMatrix::zeros(self.weight.rows(), self.weight.cols()),
            bias: DenseMatrix::zeros(1, self.bias.cols()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &DenseMatrix) -> Result<ProjectionCache> {
        let mut y = x.matmul(&self.weight)?;
        y.add_row_broadcast(self.bias.data());
        let mut norms = Vec::with_capacity(y.rows());
        for i in 0..y.rows() {
            let n = norm(y.row(i));
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::ZeroVector);
            }
            y.row_mut(i).iter_mut().for_each(|v| *v /= n);
            norms.push(n);
        }
        Ok(ProjectionCache { normalized: y, norms })
    }

    /// Accumulates parameter gradients into `grads` given `d loss / d normalized`.
    pub fn backward(&self, x: &DenseMatrix, cache: &ProjectionCache, grad_out: &DenseMatrix, grads: &mut Self) -> Result<()> {
        let u = &cache.normalized;
        let mut dy = grad_out.clone();
        for i in 0..u.rows() {
            let ui = u.row(i);
            let proj: f64 = ui.iter().zip(grad_out.row(i)).map(|(a, b)| a * b).sum();
            let n = cache.norms[i];
            for (d, uij) in dy.row_mut(i).iter_mut().zip(ui) {
                *d = (*d - uij * proj) / n;
            }
        }
        grads.weight.add_assign(&x.matmul_tn(&dy)?);
        for (b, s) in grads.bias.data_mut().iter_mut().zip(dy.col_sums()) {
            *b += s;
        }
        Ok(())
    }
}

/// Video and text projections into the shared space, plus the SigLIP logit
/// parameters (unused by the other losses).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    pub video: ProjectionHead,
    pub text: ProjectionHead,
    /// `1 × 2`: `[log_scale, bias]`
    pub siglip: DenseMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionShape {
    pub video_dim: usize,
    pub text_dim: usize,
    pub output_dim: usize,
}

impl ProjectionPair {
    pub fn new(shape: ProjectionShape, temperature: f64, seed: u64) -> Self {
        let mut rng = Rng::stream(seed, 0);
        let video = ProjectionHead::new(shape.video_dim, shape.output_dim, &mut rng);
        let text = ProjectionHead::new(shape.text_dim, shape.output_dim, &mut rng);
        let siglip = DenseMatrix::row_vector(vec![(1.0 / temperature).ln(), 0.0]).expect("finite");
        Self { video, text, siglip }
    }

    pub fn shape(&self) -> ProjectionShape {
        ProjectionShape {
            video_dim: self.video.weight.rows(),
            text_dim: self.text.weight.rows(),
            output_dim: self.video.weight.cols(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            video: self.video.zeros_like(),
            text: self.text.zeros_like(),
            siglip: DenseMatrix::zeros(1, 2),
        }
    }

    pub fn siglip_params(&self) -> SiglipParams {
        SiglipParams { log_scale: self.siglip[(0, 0)], bias: self.siglip[(0, 1)] }
    }

    pub fn embed_videos(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(self.video.forward(x)?.normalized)
    }

    pub fn embed_texts(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(self.text.forward(x)?.normalized)
    }
}

impl Parameters for ProjectionPair {
    fn tensors(&self) -> Vec<&DenseMatrix> {
        vec![&self.video.weight, &self.video.bias, &self.text.weight, &self.text.bias, &self.siglip]
    }

    fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        vec![
            &mut self.video.weight,
            &mut self.video.bias,
            &mut self.text.weight,
            &mut self.text.bias,
            &mut self.siglip,
        ]
    }
}
