//! Synthetic cohorts with known ground truth.
//!
//! Every territory label set is encoded as a latent vector with four
//! coordinates per segment, `[stenosis/100, calcification grade/3, thrombus,
//! cto]`, laid out segment-major (72 values). A video embedding is
//!
//! ```text
//! e = Σ_s vis_s · z_s · a_s  +  noise_sd · Σ_i ε_i · a_i  +  view offset  +  artery offset
//! ```
//!
//! where the `a_i` are orthonormal directions in the 512-d space and `vis_s`
//! says whether the video shows segment `s`. A video only ever shows
//! segments of its own territory. Views in the well-projected set see each
//! segment with probability `view_informativeness`; the rest with its cube,
//! so some lesions are visible in some projections only. Text embeddings
//! are a second orthonormal image of the unmasked territory latent.

use serde::{Deserialize, Serialize};

use super::embeddings::EmbeddingStore;
use super::labels::{Calcification, SegmentFinding, SegmentLabelSet};
use super::manifest::Cohort;
use super::records::{
    Artery, Equipment, SplitMap, StudyRecord, TerritoryLabels, TerritoryRefs, TerritoryReports, VideoRecord,
};
use super::segment::{Dominance, Segment, Territory, N_SEGMENTS};
use crate::acquisition::{ViewClass, VIEW_TABLE};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Rng};
use crate::report::render_labels;
use crate::EMBED_DIM;

pub const LATENT_PER_SEGMENT: usize = 4;
pub const LATENT_DIM: usize = N_SEGMENTS * LATENT_PER_SEGMENT;
const ARTERY_SCALE: f64 = 3.0;
const TEXT_TERRITORY_SCALE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelPrevalences {
    pub stenosis: f64,
    pub calcification: f64,
    pub thrombus: f64,
    pub cto: f64,
}

impl Default for LabelPrevalences {
    fn default() -> Self {
        Self { stenosis: 0.2, calcification: 0.15, thrombus: 0.05, cto: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_patients: usize,
    /// Inclusive range of diagnostic videos per study.
    pub videos_per_study: (usize, usize),
    pub prevalences: LabelPrevalences,
    pub view_informativeness: f64,
    pub noise_sd: f64,
    /// Follow-up studies per patient beyond the first.
    #[serde(default)]
    pub followup_studies: usize,
    /// Norm of the per-view-class offset added to every video embedding.
    #[serde(default = "default_view_offset")]
    pub view_offset_scale: f64,
    /// Fraction of studies that end with interventional and post-procedural
    /// acquisitions.
    #[serde(default)]
    pub procedural_fraction: f64,
    pub seed: u64,
}

fn default_view_offset() -> f64 {
    0.5
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_patients: 200,
            videos_per_study: (4, 10),
            prevalences: LabelPrevalences::default(),
            view_informativeness: 0.6,
            noise_sd: 0.3,
            followup_studies: 0,
            view_offset_scale: default_view_offset(),
            procedural_fraction: 0.2,
            seed: 42,
        }
    }
}

/// Generator parameters stored in the manifest so tests can rebuild the
/// ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRecord {
    pub kind: String,
    pub config: SynthConfig,
    pub latent_layout: String,
}

/// The orthonormal directions the generator uses, regenerated from the seed.
#[derive(Debug, Clone)]
pub struct SynthBasis {
    /// `LATENT_DIM × 512`, orthonormal rows.
    pub signal: DenseMatrix,
    /// 12 view-class offsets, unit rows.
    pub views: DenseMatrix,
    /// LCA, RCA offsets.
    pub arteries: DenseMatrix,
    /// `LATENT_DIM × 512` text-side image.
    pub text: DenseMatrix,
    pub text_territory: DenseMatrix,
}

fn orthonormal_rows(rng: &mut Rng, n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let mut v: Vec<f64> = (0..EMBED_DIM).map(|_| rng.normal()).collect();
        for _ in 0..2 {
            for r in &rows {
                let d = crate::numerics::dot(&v, r);
                for (x, y) in v.iter_mut().zip(r) {
                    *x -= d * y;
                }
            }
        }
        let n = crate::numerics::norm(&v);
        if n > 1e-6 {
            rows.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    rows
}

impl SynthBasis {
    pub fn new(seed: u64) -> Self {
        let mut rng = Rng::stream(seed, 0);
        let video = orthonormal_rows(&mut rng, LATENT_DIM + 12 + 2);
        let text = orthonormal_rows(&mut rng, LATENT_DIM + 2);
        let m = |rows: &[Vec<f64>]| DenseMatrix::from_rows(rows).expect("finite basis");
        Self {
            signal: m(&video[..LATENT_DIM]),
            views: m(&video[LATENT_DIM..LATENT_DIM + 12]),
            arteries: m(&video[LATENT_DIM + 12..]),
            text: m(&text[..LATENT_DIM]),
            text_territory: m(&text[LATENT_DIM..]),
        }
    }
}

/// Latent encoding of one label set over the given segments (others zero).
pub fn latent_of(labels: &SegmentLabelSet, segments: &[Segment]) -> Vec<f64> {
    let mut z = vec![0.0; LATENT_DIM];
    for &s in segments {
        let f = labels.finding(s);
        let base = s.index() * LATENT_PER_SEGMENT;
        z[base] = f.stenosis_or_zero() / 100.0;
        z[base + 1] = f64::from(f.calcification.grade()) / 3.0;
        z[base + 2] = if f.thrombus { 1.0 } else { 0.0 };
        z[base + 3] = if f.cto { 1.0 } else { 0.0 };
    }
    z
}

/// Views assumed to project the coronary tree well.
pub fn is_well_projected(view: ViewClass) -> bool {
    matches!(
        view,
        ViewClass::RaoCranial
            | ViewClass::ApCranial
            | ViewClass::LaoCranial
            | ViewClass::RaoCaudal
            | ViewClass::LaoCaudal
            | ViewClass::LaoStraight
    )
}

fn validate(config: &SynthConfig) -> Result<()> {
    let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
    let (lo, hi) = config.videos_per_study;
    if lo == 0 || hi == 0 {
        return bad("zero videos per study");
    }
    if lo < 2 || lo > hi {
        return bad("videos_per_study must satisfy 2 <= min <= max");
    }
    if config.n_patients == 0 {
        return bad("n_patients must be positive");
    }
    let p = config.prevalences;
    for (name, v) in [("stenosis", p.stenosis), ("calcification", p.calcification), ("thrombus", p.thrombus), ("cto", p.cto)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidConfig(format!("{name} prevalence {v} not in (0, 1)")));
        }
    }
    if !(config.noise_sd >= 0.0 && config.noise_sd.is_finite()) {
        return bad("noise_sd must be >= 0");
    }
    if !(config.view_offset_scale >= 0.0 && config.view_offset_scale.is_finite()) {
        return bad("view_offset_scale must be >= 0");
    }
    if !(0.0..=1.0).contains(&config.view_informativeness) {
        return bad("view_informativeness must lie in [0, 1]");
    }
    if !(0.0..=1.0).contains(&config.procedural_fraction) {
        return bad("procedural_fraction must lie in [0, 1]");
    }
    Ok(())
}

fn draw_finding(rng: &mut Rng, seg: Segment, p: &LabelPrevalences) -> SegmentFinding {
    let thr = seg.significance_threshold() as u32;
    let (stenosis, cto) = if rng.bernoulli(p.cto) {
        (Some(100.0), true)
    } else if rng.bernoulli(p.stenosis) {
        (Some(f64::from(thr + rng.below((100 - thr) as usize) as u32)), false)
    } else if rng.bernoulli(0.5) {
        (None, false)
    } else {
        (Some(f64::from(rng.below(thr as usize) as u32)), false)
    };
    let calcification = if rng.bernoulli(p.calcification) {
        if rng.bernoulli(0.5) { Calcification::Moderate } else { Calcification::Severe }
    } else if rng.bernoulli(0.3) {
        Calcification::Mild
    } else {
        Calcification::None
    };
    SegmentFinding { stenosis_pct: stenosis, calcification, thrombus: rng.bernoulli(p.thrombus), cto }
}

fn evolve(rng: &mut Rng, prev: &SegmentLabelSet, p: &LabelPrevalences) -> SegmentLabelSet {
    let mut next = SegmentLabelSet::new();
    for seg in Segment::ALL {
        let mut f = prev.finding(seg);
        if rng.bernoulli(0.25) {
            let delta = 20.0 + rng.below(21) as f64;
            let base = f.stenosis_or_zero();
            let pct = if rng.bernoulli(0.5) { base + delta } else { base - delta };
            let pct = pct.clamp(0.0, 100.0);
            f.stenosis_pct = Some(pct);
            f.cto = pct == 100.0;
        } else if f.cto && f.stenosis_pct != Some(100.0) {
            f.cto = false;
        }
        f.thrombus = rng.bernoulli(p.thrombus);
        next.insert(seg, f).expect("valid evolved finding");
    }
    next
}

fn angles_for(rng: &mut Rng, view: ViewClass) -> (f64, f64) {
    let (_, p, s) = VIEW_TABLE.iter().find(|(c, _, _)| *c == view).expect("named view");
    let inside = |rng: &mut Rng, lo: f64, hi: f64| (rng.uniform_range(lo + 1.0, hi - 1.0)).round();
    (inside(rng, p.lo, p.hi), inside(rng, s.lo, s.hi))
}

struct VideoDraw<'a> {
    basis: &'a SynthBasis,
    labels: &'a SegmentLabelSet,
    dominance: Dominance,
    config: &'a SynthConfig,
}

impl VideoDraw<'_> {
    fn embedding(&self, rng: &mut Rng, artery: Artery, view: ViewClass, full_visibility: bool) -> Vec<f64> {
        let territory = artery.territory().expect("synthetic videos are LCA or RCA");
        let segments = territory.segments(self.dominance);
        let p_vis = if is_well_projected(view) {
            self.config.view_informativeness
        } else {
            self.config.view_informativeness.powi(3)
        };
        let mut z = latent_of(self.labels, &segments);
        for &s in &segments {
            if !full_visibility && !rng.bernoulli(p_vis) {
                let base = s.index() * LATENT_PER_SEGMENT;
                z[base..base + LATENT_PER_SEGMENT].fill(0.0);
            }
        }
        for x in z.iter_mut() {
            *x += self.config.noise_sd * rng.normal();
        }
        let mut e = self.basis.signal.vec_mul(&z).expect("latent width");
        let t = if artery == Artery::Lca { 0 } else { 1 };
        for (i, x) in e.iter_mut().enumerate() {
            *x += self.config.view_offset_scale * self.basis.views[(view.index(), i)] + ARTERY_SCALE * self.basis.arteries[(t, i)];
        }
        e
    }
}

/// Generates a cohort (without split assignments).
pub fn synth_cohort(config: &SynthConfig) -> Result<Cohort> {
    validate(config)?;
    let basis = SynthBasis::new(config.seed);
    let mut videos = EmbeddingStore::new();
    let mut texts = EmbeddingStore::new();
    let mut studies = Vec::new();
    let named: Vec<ViewClass> = VIEW_TABLE.iter().map(|(c, _, _)| *c).collect();

    for p in 0..config.n_patients {
        let mut rng = Rng::stream(config.seed, 1 + p as u64);
        let dominance = match rng.uniform() {
            u if u < 0.8 => Dominance::Right,
            u if u < 0.9 => Dominance::Left,
            _ => Dominance::Co,
        };
        let mut labels = SegmentLabelSet::new();
        for seg in Segment::ALL {
            labels.insert(seg, draw_finding(&mut rng, seg, &config.prevalences))?;
        }
        for j in 0..=config.followup_studies {
            if j > 0 {
                labels = evolve(&mut rng, &labels, &config.prevalences);
            }
            let study_id = format!("S{p:05}-{j}");
            let draw = VideoDraw { basis: &basis, labels: &labels, dominance, config };
            let (lo, hi) = config.videos_per_study;
            let n = lo + rng.below(hi - lo + 1);
            let mut arteries = vec![Artery::Lca, Artery::Rca];
            arteries.extend((2..n).map(|_| if rng.bernoulli(0.6) { Artery::Lca } else { Artery::Rca }));
            arteries.sort();
            let mut vids = Vec::new();
            let mut push = |rng: &mut Rng, artery: Artery, equipment: Equipment, full: bool| -> Result<()> {
                let view = named[rng.below(named.len())];
                let (pa, sa) = angles_for(rng, view);
                let e = draw.embedding(rng, artery, view, full);
                let r = videos.push(&e)?;
                vids.push(VideoRecord {
                    video_id: format!("{study_id}-V{:02}", vids.len()),
                    acquired_at: 30.0 * vids.len() as f64,
                    primary_angle_deg: pa,
                    secondary_angle_deg: sa,
                    fps: 15.0,
                    frame_count: 48 + rng.below(49) as u32,
                    contrast: true,
                    equipment,
                    artery,
                    view_class: None,
                    phase: None,
                    embedding_ref: Some(r),
                });
                Ok(())
            };
            for &a in &arteries {
                push(&mut rng, a, Equipment::None, false)?;
            }
            if rng.bernoulli(config.procedural_fraction) {
                let a = if rng.bernoulli(0.5) { Artery::Lca } else { Artery::Rca };
                push(&mut rng, a, Equipment::Wire, true)?;
                push(&mut rng, a, Equipment::None, true)?;
            }
            let mut tl = TerritoryLabels::default();
            let mut reports = TerritoryReports::default();
            let mut refs = [0usize; 2];
            for (k, t) in Territory::BOTH.into_iter().enumerate() {
                let segs = t.segments(dominance);
                let restricted = labels.restricted(&segs);
                let text = render_labels(&restricted, &segs);
                let z = latent_of(&labels, &segs);
                let mut e = basis.text.vec_mul(&z)?;
                for (i, x) in e.iter_mut().enumerate() {
                    *x += TEXT_TERRITORY_SCALE * basis.text_territory[(k, i)];
                }
                refs[k] = texts.push(&e)?;
                match t {
                    Territory::Lca => {
                        tl.lca = restricted;
                        reports.lca = Some(text);
                    }
                    Territory::Rca => {
                        tl.rca = restricted;
                        reports.rca = Some(text);
                    }
                }
            }
            studies.push(StudyRecord {
                study_id,
                patient_id: format!("P{p:05}"),
                dominance,
                performed_at: 1.0e7 * j as f64,
                videos: vids,
                reports,
                labels: Some(tl),
                text_embedding_refs: Some(TerritoryRefs { lca: refs[0], rca: refs[1] }),
            });
        }
    }
    let generator = GeneratorRecord {
        kind: "coro-synth/1".into(),
        config: config.clone(),
        latent_layout: "segment-major [stenosis/100, calcification/3, thrombus, cto]".into(),
    };
    let manifest = super::Manifest {
        format: super::manifest::MANIFEST_FORMAT.into(),
        studies,
        splits: SplitMap::new(),
        generator: Some(generator),
    };
    Cohort::from_manifest(manifest, videos, Some(texts))
}
