//! Parameter containers, AdamW and the cosine warm-restart schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// A model whose trainable state is an ordered list of matrices. Gradients
/// use the same type with the same shapes.
pub trait Parameters {
    fn tensors(&self) -> Vec<&DenseMatrix>;
    fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix>;

    fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for t in self.tensors() {
            out.extend_from_slice(t.data());
        }
        out
    }

    fn assign(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::LengthMismatch(flat.len(), self.n_params()));
        }
        let mut off = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, weight_decay: 1e-2, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub config: AdamWConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl AdamW {
    pub fn new(config: AdamWConfig, n_params: usize) -> Self {
        Self { config, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    /// One update at learning rate `lr` (the schedule's value for this step).
    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P, lr: f64) -> Result<()> {
        self.step_partial(params, grads, lr, &[])
    }

    /// Like [`AdamW::step`] but leaves the tensors listed in `frozen`
    /// (indices into [`Parameters::tensors`]) untouched.
    pub fn step_partial<P: Parameters>(&mut self, params: &mut P, grads: &P, lr: f64, frozen: &[usize]) -> Result<()> {
        let g = grads.flatten();
        if g.len() != self.m.len() {
            return Err(Error::LengthMismatch(g.len(), self.m.len()));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        let c = self.config;
        self.t += 1;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        let mut off = 0;
        for (ti, t) in params.tensors_mut().into_iter().enumerate() {
            if frozen.contains(&ti) {
                off += t.len();
                continue;
            }
            for p in t.data_mut() {
                let i = off;
                off += 1;
                self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g[i];
                self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g[i] * g[i];
                let mhat = self.m[i] / bc1;
                let vhat = self.v[i] / bc2;
                *p -= lr * c.weight_decay * *p;
                *p -= lr * mhat / (vhat.sqrt() + c.eps);
            }
        }
        Ok(())
    }
}

/// Cosine annealing with warm restarts. Cycle `i` lasts `t0 · t_mult^i`
/// epochs; within a cycle the rate falls from `base` to `min` along a half
/// cosine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineWarmRestarts {
    pub base: f64,
    pub min: f64,
    pub t0: f64,
    pub t_mult: f64,
}

impl CosineWarmRestarts {
    pub fn new(base: f64, min: f64, t0: f64, t_mult: f64) -> Result<Self> {
        if !(t0 > 0.0) || !(t_mult >= 1.0) || !(base >= min) || !(min >= 0.0) {
            return Err(Error::InvalidConfig("invalid warm-restart schedule".into()));
        }
        Ok(Self { base, min, t0, t_mult })
    }

    /// Learning rate at fractional epoch `e`.
    pub fn lr(&self, e: f64) -> f64 {
        let (mut start, mut len) = (0.0, self.t0);
        while e >= start + len {
            start += len;
            len *= self.t_mult;
        }
        let frac = (e - start) / len;
        self.min + 0.5 * (self.base - self.min) * (1.0 + (std::f64::consts::PI * frac).cos())
    }
}
