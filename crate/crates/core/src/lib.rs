//! Coronary angiography analysis engine.
//!
//! The crate works on per-video embedding vectors rather than pixels. It
//! covers the whole study-level pipeline: view and phase assignment, report
//! parsing, contrastive video/report alignment, multi-video attention pooling
//! with multi-task segment heads, evaluation statistics, embedding analytics
//! and the single-study inference path used by the service.

pub mod acquisition;
pub mod analytics;
pub mod checkpoint;
pub mod contrastive;
pub mod error;
pub mod inference;
pub mod mil;
pub mod numerics;
pub mod optim;
pub mod report;
pub mod stats;
pub mod study;

pub use error::{Error, Result};

/// Width of every video and text embedding handled by the engine.
pub const EMBED_DIM: usize = 512;

/// Maximum number of diagnostic videos pooled per study.
pub const MAX_VIDEOS: usize = 10;
