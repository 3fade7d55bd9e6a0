//! Video/report alignment: projection heads, CLIP/SigLIP/InfoNCE losses,
//! training and retrieval evaluation.

mod loss;
mod projection;
mod retrieval;
mod text_stub;
mod train;

pub use loss::{contrastive_loss, loss_from_similarity, LossKind, LossOutput, SiglipParams, SimilarityLoss};
pub use projection::{ProjectionCache, ProjectionHead, ProjectionPair, ProjectionShape};
pub use retrieval::{alignment_score, dedup_rows, retrieval_eval, DirectionMetrics, RetrievalMetrics, RECALL_KS};
pub use text_stub::{hash_text_embedding, tokenize};
pub use train::{
    build_pairs, contrastive_objective, projection_checkpoint, projection_from_checkpoint, train_contrastive,
    ContrastiveConfig, ContrastivePairs, ContrastiveRun, EpochLoss, TEMPERATURE_RANGE,
};
