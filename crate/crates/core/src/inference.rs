//! Single-study inference: bundle ingestion, the stub video encoder and the
//! timed pipeline from videos to a rendered report.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::acquisition::{assign_phases, classify_view, select_diagnostic, SelectionMode};
use crate::error::{Error, Result};
use crate::mil::{MilModel, StudyInput};
use crate::numerics::{l2_normalize, DenseMatrix, Rng};
use crate::report::{render_report, OperatingThresholds, SegmentPrediction, StudyPrediction};
use crate::study::{validate_study, Artery, BinaryTask, EmbeddingStore, Segment, StudyRecord, VideoRecord};

/// Seeded fixed random projection of `features` (plus a constant term) to
/// `dim` dimensions, L2-normalised. The projection matrix depends only on
/// `seed` and the feature count.
pub fn stub_encode(features: &[f64], seed: u64, dim: usize) -> Result<Vec<f64>> {
    if features.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("encoder feature"));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("encoder width must be positive".into()));
    }
    let k = features.len() + 1;
    let mut rng = Rng::stream(seed, k as u64);
    let mut out = vec![0.0; dim];
    for o in out.iter_mut() {
        let mut acc = 0.0;
        for j in 0..k {
            let f = if j < features.len() { features[j] } else { 1.0 };
            acc += rng.normal() * f;
        }
        *o = acc;
    }
    l2_normalize(&out)
}

/// Summary features the stub encoder sees for one video.
pub fn video_features(v: &VideoRecord, latent: Option<&[f64]>) -> Vec<f64> {
    let mut f = vec![
        v.primary_angle_deg / 180.0,
        v.secondary_angle_deg / 90.0,
        v.fps / 30.0,
        f64::from(v.frame_count) / 100.0,
        if v.contrast { 1.0 } else { 0.0 },
        if v.artery == Artery::Lca { 1.0 } else { 0.0 },
        if v.artery == Artery::Rca { 1.0 } else { 0.0 },
    ];
    if let Some(z) = latent {
        f.extend_from_slice(z);
    }
    f
}

/// One study to score. Each video's embedding comes from `embeddings`
/// (keyed by video id) if present, else from the server-side store via the
/// video's `embedding_ref`, else from the stub encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceBundle {
    pub study: StudyRecord,
    #[serde(default)]
    pub embeddings: BTreeMap<String, Vec<f64>>,
    /// Optional extra stub-encoder features per video id.
    #[serde(default)]
    pub latents: BTreeMap<String, Vec<f64>>,
}

/// Parses a bundle. Errors carry the JSON path of the offending field.
pub fn parse_bundle(bytes: &[u8]) -> Result<InferenceBundle> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Loaded model plus everything needed to score a bundle.
#[derive(Debug, Clone)]
pub struct InferenceModel {
    pub model: MilModel,
    pub thresholds: OperatingThresholds,
    pub version: String,
    pub encoder_seed: u64,
    pub store: Option<EmbeddingStore>,
}

impl InferenceModel {
    pub fn new(model: MilModel, version: impl Into<String>) -> Self {
        Self {
            model,
            thresholds: OperatingThresholds::default(),
            version: version.into(),
            encoder_seed: 0,
            store: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.model.params.input_dim()
    }
}

/// Wall-clock milliseconds per pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub ingest: f64,
    pub preprocess: f64,
    pub pool: f64,
    pub heads: f64,
    pub render: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResult {
    pub segment: String,
    pub name: String,
    /// Unclamped regression output in percent.
    pub stenosis_pct: f64,
    pub p_stenosis: f64,
    pub p_calcification: f64,
    pub p_thrombus: f64,
    pub p_cto: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoWeight {
    pub video_id: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub study_id: String,
    pub model_version: String,
    pub segments: Vec<SegmentResult>,
    pub report: String,
    pub videos: Vec<VideoWeight>,
    /// `true` when two-stage pooling ran without tokens.
    pub pooling_fell_back: bool,
    pub latency_ms: LatencyBreakdown,
}

impl InferenceResult {
    /// Copy with the timings zeroed, for comparing outputs across runs.
    pub fn without_latency(&self) -> Self {
        Self { latency_ms: LatencyBreakdown::default(), ..self.clone() }
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn resolve_embedding(bundle: &InferenceBundle, v: &VideoRecord, model: &InferenceModel) -> Result<Vec<f64>> {
    let dim = model.input_dim();
    let e = if let Some(e) = bundle.embeddings.get(&v.video_id) {
        e.clone()
    } else if let (Some(r), Some(store)) = (v.embedding_ref, model.store.as_ref()) {
        store.get_f64(r)?
    } else {
        let latent = bundle.latents.get(&v.video_id).map(Vec::as_slice);
        stub_encode(&video_features(v, latent), model.encoder_seed, dim)?
    };
    if e.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "video {} embedding has {} values, model expects {dim}",
            v.video_id,
            e.len()
        )));
    }
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("video embedding"));
    }
    Ok(e)
}

/// Validate, assign phases, select up to the model's video budget, pool,
/// apply the heads and render the report. Every stage is timed.
pub fn infer_study(bundle: &InferenceBundle, model: &InferenceModel) -> Result<InferenceResult> {
    infer_study_timed(bundle, model, Instant::now())
}

/// As [`infer_study`], with the clock started at `received` (e.g. before
/// the request body was parsed).
pub fn infer_study_timed(bundle: &InferenceBundle, model: &InferenceModel, received: Instant) -> Result<InferenceResult> {
    let mut study = bundle.study.clone();
    validate_study(&mut study, "study")?;
    let ingest = ms(received);

    let t_pre = Instant::now();
    assign_phases(&mut study)?;
    let sel = select_diagnostic(&study, model.model.pooling.max_videos, SelectionMode::Inference)?;
    let rows = sel.videos.iter().map(|v| resolve_embedding(bundle, v, model)).collect::<Result<Vec<_>>>()?;
    let views = sel
        .videos
        .iter()
        .map(|v| v.view_class.map(Ok).unwrap_or_else(|| classify_view(v.primary_angle_deg, v.secondary_angle_deg)))
        .collect::<Result<Vec<_>>>()?;
    let mut input = StudyInput::new(DenseMatrix::from_rows(&rows)?);
    input.views = Some(views);
    let preprocess = ms(t_pre);

    let t_pool = Instant::now();
    let state = model.model.pool(&input)?;
    let pool = ms(t_pool);

    let t_heads = Instant::now();
    let (out, _) =
        crate::mil::forward_heads(&state.embedding, &model.model.params.head_w, model.model.params.head_b.data(), None)?;
    if out.raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("head output"));
    }
    let heads = ms(t_heads);

    let t_render = Instant::now();
    let mut prediction = StudyPrediction::new();
    let mut segments = Vec::with_capacity(Segment::ALL.len());
    for seg in Segment::ALL {
        let i = seg.index();
        let p = SegmentPrediction {
            stenosis_pct: out.stenosis_pct_raw(i),
            p_stenosis: out.probability(BinaryTask::Stenosis, i),
            p_calcification: out.probability(BinaryTask::Calcification, i),
            p_thrombus: out.probability(BinaryTask::Thrombus, i),
            p_cto: out.probability(BinaryTask::Cto, i),
        };
        segments.push(SegmentResult {
            segment: seg.id().to_string(),
            name: seg.display_name().to_string(),
            stenosis_pct: p.stenosis_pct,
            p_stenosis: p.p_stenosis,
            p_calcification: p.p_calcification,
            p_thrombus: p.p_thrombus,
            p_cto: p.p_cto,
        });
        prediction.insert(seg, p);
    }
    let report = render_report(&prediction, &model.thresholds)?;
    let render = ms(t_render);
    let videos = sel
        .videos
        .iter()
        .zip(&state.weights)
        .map(|(v, &w)| VideoWeight { video_id: v.video_id.clone(), weight: w })
        .collect();
    Ok(InferenceResult {
        study_id: study.study_id.clone(),
        model_version: model.version.clone(),
        segments,
        report,
        videos,
        pooling_fell_back: state.fell_back,
        latency_ms: LatencyBreakdown { ingest, preprocess, pool, heads, render, total: ms(received) },
    })
}
