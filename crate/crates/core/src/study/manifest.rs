//! Cohort manifest (JSON) ingestion and validation.
//!
//! ```json
//! {
//!   "format": "coro-manifest/1",
//!   "studies": [ { "study_id": "...", "patient_id": "...", "dominance": "right",
//!                  "performed_at": 0.0,
//!                  "videos": [ { "video_id": "...", "acquired_at": 1.0,
//!                                "primary_angle_deg": -30.0, "secondary_angle_deg": 30.0,
//!                                "fps": 15.0, "frame_count": 60, "contrast": true,
//!                                "equipment": "none", "artery": "LCA", "embedding_ref": 0 } ],
//!                  "reports": { "lca": "...", "rca": "..." },
//!                  "labels": { "lca": { "prox_lad": { "stenosis_pct": 70.0 } }, "rca": {} },
//!                  "text_embedding_refs": { "lca": 0, "rca": 1 } } ],
//!   "splits": { "<patient_id>": "train" }
//! }
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embeddings::EmbeddingStore;
use super::records::{Artery, SplitMap, StudyRecord};
use super::segment::Dominance;
use super::synth::GeneratorRecord;
use crate::error::{Error, Result};

pub const MANIFEST_FORMAT: &str = "coro-manifest/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub studies: Vec<StudyRecord>,
    #[serde(default)]
    pub splits: SplitMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorRecord>,
}

impl Manifest {
    /// Parses manifest JSON, reporting the field path of any schema error.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let m: Manifest = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::Schema {
                path: "format".into(),
                message: format!("expected '{MANIFEST_FORMAT}', got '{}'", m.format),
            });
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A validated set of studies with their embedding stores.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub studies: Vec<StudyRecord>,
    pub splits: SplitMap,
    pub videos: EmbeddingStore,
    pub texts: Option<EmbeddingStore>,
    pub generator: Option<GeneratorRecord>,
}

impl Cohort {
    /// Validates a parsed manifest against its stores.
    pub fn from_manifest(manifest: Manifest, videos: EmbeddingStore, texts: Option<EmbeddingStore>) -> Result<Self> {
        let mut studies = manifest.studies;
        let mut seen = BTreeSet::new();
        for (i, study) in studies.iter_mut().enumerate() {
            if !seen.insert(study.study_id.clone()) {
                return Err(Error::DuplicateStudy(study.study_id.clone()));
            }
            validate_study(study, &format!("studies[{i}]"))?;
            for (j, v) in study.videos.iter().enumerate() {
                let r = v.embedding_ref.ok_or_else(|| Error::Schema {
                    path: format!("studies[{i}].videos[{j}].embedding_ref"),
                    message: "missing".into(),
                })?;
                if r >= videos.len() {
                    return Err(Error::DanglingEmbedding { reference: r, count: videos.len() });
                }
            }
            if let (Some(refs), Some(t)) = (study.text_embedding_refs, &texts) {
                let count = t.len();
                for r in [refs.lca, refs.rca] {
                    if r >= count {
                        return Err(Error::DanglingEmbedding { reference: r, count });
                    }
                }
            }
        }
        let patients: BTreeSet<&str> = studies.iter().map(|s| s.patient_id.as_str()).collect();
        for p in manifest.splits.keys() {
            if !patients.contains(p.as_str()) {
                return Err(Error::Schema {
                    path: format!("splits.{p}"),
                    message: "patient not in cohort".into(),
                });
            }
        }
        Ok(Self { studies, splits: manifest.splits, videos, texts, generator: manifest.generator })
    }

    pub fn to_manifest(&self) -> Manifest {
        Manifest {
            format: MANIFEST_FORMAT.into(),
            studies: self.studies.clone(),
            splits: self.splits.clone(),
            generator: self.generator.clone(),
        }
    }

    /// Distinct patient ids in sorted order.
    pub fn patients(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.studies.iter().map(|s| s.patient_id.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Studies whose patient is assigned to `split`.
    pub fn studies_in(&self, split: super::Split) -> impl Iterator<Item = &StudyRecord> {
        self.studies.iter().filter(move |s| self.splits.get(&s.patient_id) == Some(&split))
    }

    pub fn video_embedding(&self, video: &super::VideoRecord) -> Result<Vec<f64>> {
        let r = video.embedding_ref.ok_or_else(|| Error::Schema {
            path: format!("video {}.embedding_ref", video.video_id),
            message: "missing".into(),
        })?;
        self.videos.get_f64(r)
    }
}

/// Checks one study's invariants and sorts its videos by acquisition time.
///
/// `path` prefixes field paths in error messages.
pub fn validate_study(study: &mut StudyRecord, path: &str) -> Result<()> {
    if study.study_id.is_empty() {
        return Err(Error::Schema { path: format!("{path}.study_id"), message: "empty".into() });
    }
    if study.patient_id.is_empty() {
        return Err(Error::Schema { path: format!("{path}.patient_id"), message: "empty".into() });
    }
    if study.dominance == Dominance::Unknown {
        return Err(Error::UnknownDominance(study.study_id.clone()));
    }
    let mut ids = BTreeSet::new();
    for (j, v) in study.videos.iter().enumerate() {
        let vp = format!("{path}.videos[{j}]");
        let bad = |field: &str, message: &str| Error::Schema { path: format!("{vp}.{field}"), message: message.into() };
        if !ids.insert(v.video_id.as_str()) {
            return Err(bad("video_id", "duplicate within study"));
        }
        if !v.acquired_at.is_finite() {
            return Err(bad("acquired_at", "must be finite"));
        }
        if !(v.fps.is_finite() && v.fps > 0.0) {
            return Err(bad("fps", "must be > 0"));
        }
        if v.frame_count < 1 {
            return Err(bad("frame_count", "must be >= 1"));
        }
        if !v.primary_angle_deg.is_finite() {
            return Err(bad("primary_angle_deg", "must be finite"));
        }
        if !v.secondary_angle_deg.is_finite() {
            return Err(bad("secondary_angle_deg", "must be finite"));
        }
    }
    study.videos.sort_by(|a, b| a.acquired_at.total_cmp(&b.acquired_at));
    let has = |a: Artery| study.videos.iter().any(|v| v.contrast && v.artery == a);
    if !(has(Artery::Lca) && has(Artery::Rca)) {
        return Err(Error::IncompleteStudy(study.study_id.clone()));
    }
    if let Some(labels) = study.labels.as_mut() {
        labels.lca.normalize()?;
        labels.rca.normalize()?;
    }
    Ok(())
}

/// Reads and validates a manifest plus its embedding stores.
pub fn load_manifest(
    manifest: impl AsRef<Path>,
    video_embeddings: impl AsRef<Path>,
    text_embeddings: Option<&Path>,
) -> Result<Cohort> {
    let text = fs::read_to_string(manifest)?;
    let m = Manifest::from_json(&text)?;
    let videos = EmbeddingStore::read(video_embeddings)?;
    let texts = text_embeddings.map(EmbeddingStore::read).transpose()?;
    Cohort::from_manifest(m, videos, texts)
}
