use crate::error::{Error, Result};
use crate::numerics::{dot, DenseMatrix, Rng};

const MAX_POWER_ITERS: usize = 500;
const POWER_TOL: f64 = 1e-12;
const ZERO_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `n_components × dim`, orthonormal rows.
    pub components: DenseMatrix,
    pub eigenvalues: Vec<f64>,
    /// Eigenvalue over total variance, non-increasing.
    pub explained_variance_ratio: Vec<f64>,
    /// `n × n_components` scores of the centred data.
    pub projected: DenseMatrix,
}

impl Pca {
    /// Maps scores back to the original space.
    pub fn reconstruct(&self, scores: &DenseMatrix) -> Result<DenseMatrix> {
        let mut x = scores.matmul(&self.components)?;
        x.add_row_broadcast(&self.mean);
        Ok(x)
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // Two passes keep orthogonality at round-off level.
    for _ in 0..2 {
        for b in basis {
            let p = dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Principal components of the rows of `data` via power iteration on the
/// covariance with deflation. Each iterate is re-orthogonalised against the
/// components already found, so the basis stays orthonormal even across
/// zero eigenvalues.
pub fn pca(data: &DenseMatrix, n_components: usize) -> Result<Pca> {
    let (n, d) = data.shape();
    if n < 2 {
        return Err(Error::InvalidArgument("PCA needs at least two rows".into()));
    }
    if n_components == 0 || n_components > (n - 1).min(d) {
        return Err(Error::InvalidArgument(format!(
            "n_components = {n_components} must lie in 1..={}",
            (n - 1).min(d)
        )));
    }
    if !data.is_finite() {
        return Err(Error::NonFinite("PCA input"));
    }
    let mean: Vec<f64> = data.col_sums().iter().map(|s| s / n as f64).collect();
    let mut centred = data.clone();
    let neg: Vec<f64> = mean.iter().map(|m| -m).collect();
    centred.add_row_broadcast(&neg);
    let mut cov = centred.matmul_tn(&centred)?;
    cov.scale(1.0 / (n - 1) as f64);
    let total: f64 = (0..d).map(|i| cov[(i, i)]).sum();

    let mut rng = Rng::new(0x9ca);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n_components);
    let mut eigenvalues = Vec::with_capacity(n_components);
    for _ in 0..n_components {
        let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        orthogonalize(&mut v, &basis);
        normalize(&mut v);
        for _ in 0..MAX_POWER_ITERS {
            let mut w = cov.vec_mul(&v)?;
            orthogonalize(&mut w, &basis);
            if normalize(&mut w) <= ZERO_VARIANCE * total {
                // No variance left: keep the current orthonormal direction,
                // since round-off in `w` lies along earlier components.
                break;
            }
            let diff: f64 = v.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = w;
            if diff < POWER_TOL {
                break;
            }
        }
        orthogonalize(&mut v, &basis);
        normalize(&mut v);
        let lambda = dot(&v, &cov.vec_mul(&v)?).max(0.0);
        basis.push(v);
        eigenvalues.push(lambda);
    }
    // Slow convergence on near-equal eigenvalues can leave the order
    // slightly off; sort so the ratios are non-increasing.
    let mut order: Vec<usize> = (0..n_components).collect();
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
    let basis: Vec<Vec<f64>> = order.iter().map(|&i| basis[i].clone()).collect();
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let components = DenseMatrix::from_rows(&basis)?;
    let projected = centred.matmul_nt(&components)?;
    let explained_variance_ratio =
        eigenvalues.iter().map(|l| if total > 0.0 { l / total } else { 0.0 }).collect();
    Ok(Pca { mean, components, eigenvalues, explained_variance_ratio, projected })
}
