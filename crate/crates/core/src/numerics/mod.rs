//! Dense 64-bit linear algebra, seeded randomness and gradient checking.

mod gradcheck;
mod matrix;
mod rng;

pub use gradcheck::{finite_diff_check, GradCheck};
pub use matrix::DenseMatrix;
pub use rng::Rng;

use crate::error::{Error, Result};

/// Numerically stable softmax, optionally restricted to the `true` entries of
/// `mask`. Masked-out entries come back as exactly `0.0`.
pub fn softmax(v: &[f64], mask: Option<&[bool]>) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::DegenerateSoftmax("empty vector"));
    }
    if let Some(m) = mask {
        if m.len() != v.len() {
            return Err(Error::LengthMismatch(v.len(), m.len()));
        }
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("softmax input"));
    }
    let keep = |i: usize| mask.is_none_or(|m| m[i]);
    let max = (0..v.len())
        .filter(|&i| keep(i))
        .map(|i| v[i])
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateSoftmax("mask has no true entries"));
    }
    let mut out: Vec<f64> = (0..v.len())
        .map(|i| if keep(i) { (v[i] - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = out.iter().sum();
    for x in &mut out {
        *x /= total;
    }
    Ok(out)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity clamped to `[-1, 1]`. Zero-norm inputs are an error.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    if !na.is_finite() || !nb.is_finite() {
        return Err(Error::NonFinite("cosine input"));
    }
    Ok((dot(a, b) / (dot(a, a) * dot(b, b)).sqrt()).clamp(-1.0, 1.0))
}

/// Returns `a / ‖a‖`.
pub fn l2_normalize(a: &[f64]) -> Result<Vec<f64>> {
    let n = norm(a);
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(a.iter().map(|x| x / n).collect())
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}
