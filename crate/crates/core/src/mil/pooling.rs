use serde::{Deserialize, Serialize};

use super::params::{MilParams, PoolingConfig, PoolingMode};
use crate::acquisition::ViewClass;
use crate::error::{Error, Result};
use crate::numerics::{sigmoid, softmax, DenseMatrix, Rng};

/// One study's videos as pooling input. Rows whose mask entry is `false`
/// are padding and never read.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyInput {
    pub videos: DenseMatrix,
    pub mask: Vec<bool>,
    /// View class per slot; required when the view embedding is enabled.
    pub views: Option<Vec<ViewClass>>,
    /// Per-slot token matrices for two-stage pooling.
    pub tokens: Option<Vec<DenseMatrix>>,
}

impl StudyInput {
    pub fn new(videos: DenseMatrix) -> Self {
        let mask = vec![true; videos.rows()];
        Self { videos, mask, views: None, tokens: None }
    }

    pub fn n_real(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Pads with zero rows up to `slots`.
    pub fn padded(&self, slots: usize) -> Self {
        let n = self.videos.rows();
        if slots <= n {
            return self.clone();
        }
        let mut data = self.videos.data().to_vec();
        data.resize(slots * self.videos.cols(), 0.0);
        let mut mask = self.mask.clone();
        mask.resize(slots, false);
        let views = self.views.as_ref().map(|v| {
            let mut v = v.clone();
            v.resize(slots, ViewClass::Other);
            v
        });
        let tokens = self.tokens.as_ref().map(|t| {
            let mut t = t.clone();
            t.resize(slots, DenseMatrix::zeros(1, self.videos.cols()));
            t
        });
        Self {
            videos: DenseMatrix::new(slots, self.videos.cols(), data).expect("finite"),
            mask,
            views,
            tokens,
        }
    }

    /// Keeps only the given slots, in the given order.
    pub fn select(&self, slots: &[usize]) -> Self {
        Self {
            videos: self.videos.select_rows(slots),
            mask: slots.iter().map(|&i| self.mask[i]).collect(),
            views: self.views.as_ref().map(|v| slots.iter().map(|&i| v[i]).collect()),
            tokens: self.tokens.as_ref().map(|t| slots.iter().map(|&i| t[i].clone()).collect()),
        }
    }
}

/// Pooled study representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledStudyState {
    pub embedding: Vec<f64>,
    /// One weight per input slot; padded slots hold exactly 0.
    pub weights: Vec<f64>,
    pub mask: Vec<bool>,
    /// Set when two-stage pooling had no tokens and fell back to CLS attention.
    pub fell_back: bool,
}

#[derive(Debug, Clone)]
struct ClsCache {
    k: DenseMatrix,
    /// Attention per head over real videos.
    attn: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct GatedCache {
    a: DenseMatrix,
    s: DenseMatrix,
    weights: Vec<f64>,
}

/// Intermediate values of a forward pass.
#[derive(Debug, Clone)]
pub struct PoolCache {
    x: DenseMatrix,
    v: DenseMatrix,
    dropout: Option<Vec<f64>>,
    cls: Option<ClsCache>,
    gated: Option<GatedCache>,
    argmax: Vec<usize>,
    token_attn: Option<Vec<(DenseMatrix, Vec<f64>)>>,
    views: Option<Vec<ViewClass>>,
}

fn effective_mode(config: &PoolingConfig, input: &StudyInput) -> (PoolingMode, bool) {
    if config.mode == PoolingMode::TwoStageCls && input.tokens.is_none() {
        (PoolingMode::AttentionCls, true)
    } else {
        (config.mode, false)
    }
}

fn cls_forward(params: &MilParams, heads: usize, x: &DenseMatrix, v: &DenseMatrix) -> Result<(Vec<f64>, ClsCache)> {
    let mut k = x.matmul(&params.w_k)?;
    k.add_row_broadcast(params.b_k.data());
    let h = v.cols();
    let dh = h / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let q = params.cls.row(0);
    let mut out = vec![0.0; h];
    let mut attn = Vec::with_capacity(heads);
    for head in 0..heads {
        let cols = head * dh..(head + 1) * dh;
        let scores: Vec<f64> = (0..k.rows())
            .map(|i| k.row(i)[cols.clone()].iter().zip(&q[cols.clone()]).map(|(a, b)| a * b).sum::<f64>() * scale)
            .collect();
        let a = softmax(&scores, None)?;
        for (i, ai) in a.iter().enumerate() {
            for c in cols.clone() {
                out[c] += ai * v[(i, c)];
            }
        }
        attn.push(a);
    }
    Ok((out, ClsCache { k, attn }))
}

fn gated_forward(params: &MilParams, v: &DenseMatrix) -> Result<(Vec<f64>, GatedCache)> {
    let mut a = v.matmul(&params.gate_v)?;
    a.data_mut().iter_mut().for_each(|z| *z = z.tanh());
    let mut s = v.matmul(&params.gate_u)?;
    s.data_mut().iter_mut().for_each(|z| *z = sigmoid(*z));
    let w = params.gate_w.row(0);
    let scores: Vec<f64> = (0..v.rows())
        .map(|i| a.row(i).iter().zip(s.row(i)).zip(w).map(|((x, y), z)| x * y * z).sum())
        .collect();
    let weights = softmax(&scores, None)?;
    let mut out = vec![0.0; v.cols()];
    for (i, wi) in weights.iter().enumerate() {
        for (o, x) in out.iter_mut().zip(v.row(i)) {
            *o += wi * x;
        }
    }
    Ok((out, GatedCache { a, s, weights }))
}

fn mean_forward(v: &DenseMatrix) -> Vec<f64> {
    let n = v.rows() as f64;
    v.col_sums().into_iter().map(|x| x / n).collect()
}

fn max_forward(v: &DenseMatrix) -> (Vec<f64>, Vec<usize>) {
    let mut out = v.row(0).to_vec();
    let mut arg = vec![0; v.cols()];
    for i in 1..v.rows() {
        for (c, x) in v.row(i).iter().enumerate() {
            if *x > out[c] {
                out[c] = *x;
                arg[c] = i;
            }
        }
    }
    (out, arg)
}

fn head_mean(attn: &[Vec<f64>]) -> Vec<f64> {
    let h = attn.len() as f64;
    (0..attn[0].len()).map(|i| attn.iter().map(|a| a[i]).sum::<f64>() / h).collect()
}

/// Pools a study. `dropout` supplies the random stream when training.
pub fn pool_forward(
    params: &MilParams,
    config: &PoolingConfig,
    input: &StudyInput,
    dropout: Option<&mut Rng>,
) -> Result<(PooledStudyState, PoolCache)> {
    if input.mask.len() != input.videos.rows() {
        return Err(Error::LengthMismatch(input.mask.len(), input.videos.rows()));
    }
    if input.videos.cols() != params.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "video width {} vs model input {}",
            input.videos.cols(),
            params.input_dim()
        )));
    }
    let real: Vec<usize> = (0..input.mask.len()).filter(|&i| input.mask[i]).collect();
    if real.is_empty() {
        return Err(Error::EmptyStudy);
    }
    let (mode, fell_back) = effective_mode(config, input);
    if fell_back {
        log::warn!("two_stage_cls without token matrices; using attention_cls");
    }

    let d = params.input_dim();
    let mut x = input.videos.select_rows(&real);
    let mut token_attn = None;
    if mode == PoolingMode::TwoStageCls {
        let tokens = input.tokens.as_ref().expect("checked by effective_mode");
        if tokens.len() != input.mask.len() {
            return Err(Error::LengthMismatch(tokens.len(), input.mask.len()));
        }
        let scale = 1.0 / (d as f64).sqrt();
        let mut cache = Vec::with_capacity(real.len());
        for (r, &slot) in real.iter().enumerate() {
            let t = &tokens[slot];
            if t.cols() != d || t.rows() == 0 {
                return Err(Error::DimensionMismatch(format!("token matrix {:?} for width {d}", t.shape())));
            }
            let scores: Vec<f64> = t.matmul_nt(&params.token_query)?.data().iter().map(|s| s * scale).collect();
            let b = softmax(&scores, None)?;
            let pooled = DenseMatrix::row_vector(b.clone())?.matmul(t)?;
            x.row_mut(r).copy_from_slice(pooled.row(0));
            cache.push((t.clone(), b));
        }
        token_attn = Some(cache);
    }
    let views = if config.view_embedding {
        let views = input
            .views
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("view embedding enabled but no view classes given".into()))?;
        let vs: Vec<ViewClass> = real.iter().map(|&i| views[i]).collect();
        for (r, vc) in vs.iter().enumerate() {
            for (xv, e) in x.row_mut(r).iter_mut().zip(params.view_embed.row(vc.index())) {
                *xv += e;
            }
        }
        Some(vs)
    } else {
        None
    };

    let mut v = x.matmul(&params.w_v)?;
    v.add_row_broadcast(params.b_v.data());
    let dropout_mask = match dropout {
        Some(rng) if config.dropout > 0.0 => {
            let keep = 1.0 - config.dropout;
            let m: Vec<f64> = (0..v.len()).map(|_| if rng.bernoulli(keep) { 1.0 / keep } else { 0.0 }).collect();
            v.data_mut().iter_mut().zip(&m).for_each(|(x, s)| *x *= s);
            Some(m)
        }
        _ => None,
    };

    let heads = config.num_heads;
    let n = real.len();
    let (embedding, local_w, cls, gated, argmax) = match mode {
        PoolingMode::AttentionCls | PoolingMode::TwoStageCls => {
            let (out, c) = cls_forward(params, heads, &x, &v)?;
            let w = head_mean(&c.attn);
            (out, w, Some(c), None, Vec::new())
        }
        PoolingMode::GatedAttention => {
            let (out, g) = gated_forward(params, &v)?;
            let w = g.weights.clone();
            (out, w, None, Some(g), Vec::new())
        }
        PoolingMode::Mean => (mean_forward(&v), vec![1.0 / n as f64; n], None, None, Vec::new()),
        PoolingMode::Max => {
            let (out, arg) = max_forward(&v);
            let mut w = vec![0.0; n];
            for &a in &arg {
                w[a] += 1.0 / arg.len() as f64;
            }
            (out, w, None, None, arg)
        }
        PoolingMode::HybridAttentionCls => {
            let (g_out, g) = gated_forward(params, &v)?;
            let (c_out, c) = cls_forward(params, heads, &x, &v)?;
            let cw = head_mean(&c.attn);
            let w = g.weights.iter().zip(&cw).map(|(a, b)| 0.5 * (a + b)).collect();
            ([g_out, c_out].concat(), w, Some(c), Some(g), Vec::new())
        }
        PoolingMode::HybridMeanCls => {
            let m = mean_forward(&v);
            let (c_out, c) = cls_forward(params, heads, &x, &v)?;
            let cw = head_mean(&c.attn);
            let w = cw.iter().map(|b| 0.5 * (1.0 / n as f64 + b)).collect();
            ([m, c_out].concat(), w, Some(c), None, Vec::new())
        }
    };
    let mut weights = vec![0.0; input.mask.len()];
    for (r, &slot) in real.iter().enumerate() {
        weights[slot] = local_w[r];
    }
    let state = PooledStudyState { embedding, weights, mask: input.mask.clone(), fell_back };
    let cache = PoolCache { x, v, dropout: dropout_mask, cls, gated, argmax, token_attn, views };
    Ok((state, cache))
}

fn cls_backward(
    params: &MilParams,
    heads: usize,
    cache: &PoolCache,
    c: &ClsCache,
    dout: &[f64],
    dv: &mut DenseMatrix,
    grads: &mut MilParams,
) -> Result<DenseMatrix> {
    let v = &cache.v;
    let h = v.cols();
    let dh = h / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let q = params.cls.row(0);
    let n = v.rows();
    let mut dk = DenseMatrix::zeros(n, h);
    for (head, a) in c.attn.iter().enumerate() {
        let cols = head * dh..(head + 1) * dh;
        let mut da = vec![0.0; n];
        for i in 0..n {
            for col in cols.clone() {
                dv.row_mut(i)[col] += a[i] * dout[col];
                da[i] += dout[col] * v[(i, col)];
            }
        }
        let avg: f64 = a.iter().zip(&da).map(|(x, y)| x * y).sum();
        for i in 0..n {
            let ds = a[i] * (da[i] - avg) * scale;
            for col in cols.clone() {
                dk.row_mut(i)[col] += ds * q[col];
                grads.cls.row_mut(0)[col] += ds * c.k[(i, col)];
            }
        }
    }
    grads.w_k.add_assign(&cache.x.matmul_tn(&dk)?);
    for (g, s) in grads.b_k.data_mut().iter_mut().zip(dk.col_sums()) {
        *g += s;
    }
    dk.matmul_nt(&params.w_k)
}

fn gated_backward(
    params: &MilParams,
    v: &DenseMatrix,
    g: &GatedCache,
    dout: &[f64],
    dv: &mut DenseMatrix,
    grads: &mut MilParams,
) -> Result<()> {
    let n = v.rows();
    let w = params.gate_w.row(0);
    let da: Vec<f64> = (0..n).map(|i| v.row(i).iter().zip(dout).map(|(x, y)| x * y).sum()).collect();
    let avg: f64 = g.weights.iter().zip(&da).map(|(x, y)| x * y).sum();
    let gd = g.a.cols();
    let mut dza = DenseMatrix::zeros(n, gd);
    let mut dzs = DenseMatrix::zeros(n, gd);
    for i in 0..n {
        for (dvc, o) in dv.row_mut(i).iter_mut().zip(dout) {
            *dvc += g.weights[i] * o;
        }
        let ds = g.weights[i] * (da[i] - avg);
        for j in 0..gd {
            let (a, s) = (g.a[(i, j)], g.s[(i, j)]);
            grads.gate_w.row_mut(0)[j] += ds * a * s;
            dza.row_mut(i)[j] = ds * w[j] * s * (1.0 - a * a);
            dzs.row_mut(i)[j] = ds * w[j] * a * s * (1.0 - s);
        }
    }
    grads.gate_v.add_assign(&v.matmul_tn(&dza)?);
    grads.gate_u.add_assign(&v.matmul_tn(&dzs)?);
    dv.add_assign(&dza.matmul_nt(&params.gate_v)?);
    dv.add_assign(&dzs.matmul_nt(&params.gate_u)?);
    Ok(())
}

/// Accumulates parameter gradients given `d loss / d pooled embedding`.
pub fn pool_backward(
    params: &MilParams,
    config: &PoolingConfig,
    cache: &PoolCache,
    d_pooled: &[f64],
    grads: &mut MilParams,
) -> Result<()> {
    let v = &cache.v;
    let (n, h) = v.shape();
    let expected = if config.mode.is_hybrid() { 2 * h } else { h };
    if d_pooled.len() != expected {
        return Err(Error::LengthMismatch(d_pooled.len(), expected));
    }
    let heads = config.num_heads;
    let mut dv = DenseMatrix::zeros(n, h);
    let mut dx_k: Option<DenseMatrix> = None;
    let mode = if cache.token_attn.is_none() && config.mode == PoolingMode::TwoStageCls {
        PoolingMode::AttentionCls
    } else {
        config.mode
    };
    match mode {
        PoolingMode::AttentionCls | PoolingMode::TwoStageCls => {
            let c = cache.cls.as_ref().expect("cls cache");
            dx_k = Some(cls_backward(params, heads, cache, c, d_pooled, &mut dv, grads)?);
        }
        PoolingMode::GatedAttention => {
            gated_backward(params, v, cache.gated.as_ref().expect("gated cache"), d_pooled, &mut dv, grads)?;
        }
        PoolingMode::Mean => {
            for i in 0..n {
                for (d, o) in dv.row_mut(i).iter_mut().zip(d_pooled) {
                    *d += o / n as f64;
                }
            }
        }
        PoolingMode::Max => {
            for (c, &i) in cache.argmax.iter().enumerate() {
                dv.row_mut(i)[c] += d_pooled[c];
            }
        }
        PoolingMode::HybridAttentionCls => {
            let (dg, dc) = d_pooled.split_at(h);
            gated_backward(params, v, cache.gated.as_ref().expect("gated cache"), dg, &mut dv, grads)?;
            let c = cache.cls.as_ref().expect("cls cache");
            dx_k = Some(cls_backward(params, heads, cache, c, dc, &mut dv, grads)?);
        }
        PoolingMode::HybridMeanCls => {
            let (dm, dc) = d_pooled.split_at(h);
            for i in 0..n {
                for (d, o) in dv.row_mut(i).iter_mut().zip(dm) {
                    *d += o / n as f64;
                }
            }
            let c = cache.cls.as_ref().expect("cls cache");
            dx_k = Some(cls_backward(params, heads, cache, c, dc, &mut dv, grads)?);
        }
    }
    if let Some(m) = &cache.dropout {
        dv.data_mut().iter_mut().zip(m).for_each(|(d, s)| *d *= s);
    }
    grads.w_v.add_assign(&cache.x.matmul_tn(&dv)?);
    for (g, s) in grads.b_v.data_mut().iter_mut().zip(dv.col_sums()) {
        *g += s;
    }
    if cache.views.is_none() && cache.token_attn.is_none() {
        return Ok(());
    }
    let mut dx = dv.matmul_nt(&params.w_v)?;
    if let Some(dk) = dx_k {
        dx.add_assign(&dk);
    }
    if let Some(views) = &cache.views {
        for (r, vc) in views.iter().enumerate() {
            for (g, d) in grads.view_embed.row_mut(vc.index()).iter_mut().zip(dx.row(r)) {
                *g += d;
            }
        }
    }
    if let Some(tokens) = &cache.token_attn {
        let d = params.input_dim();
        let scale = 1.0 / (d as f64).sqrt();
        for (r, (t, b)) in tokens.iter().enumerate() {
            let dxr = dx.row(r);
            let db: Vec<f64> = (0..t.rows()).map(|j| t.row(j).iter().zip(dxr).map(|(x, y)| x * y).sum()).collect();
            let avg: f64 = b.iter().zip(&db).map(|(x, y)| x * y).sum();
            for j in 0..t.rows() {
                let ds = b[j] * (db[j] - avg) * scale;
                for (g, x) in grads.token_query.row_mut(0).iter_mut().zip(t.row(j)) {
                    *g += ds * x;
                }
            }
        }
    }
    Ok(())
}
