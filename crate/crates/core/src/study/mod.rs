//! Domain model: segments, labels, studies, cohort manifests, splitting and
//! synthetic cohort generation.

mod embeddings;
mod labels;
mod manifest;
mod records;
mod segment;
mod split;
pub mod synth;

pub use embeddings::EmbeddingStore;
pub use labels::{derive_binary_labels, BinaryLabels, BinaryTask, Calcification, SegmentFinding, SegmentLabelSet};
pub use manifest::{load_manifest, validate_study, Cohort, Manifest, MANIFEST_FORMAT};
pub use records::{
    Artery, Equipment, Split, SplitMap, StudyRecord, TerritoryLabels, TerritoryRefs, TerritoryReports, VideoRecord,
};
pub use segment::{Dominance, Segment, Territory, N_SEGMENTS};
pub use split::{largest_remainder, split_by_patient};
pub use synth::{synth_cohort, LabelPrevalences, SynthConfig};
