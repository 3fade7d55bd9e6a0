//! Multi-instance study pooling and the multitask segment heads.

pub mod ablation;
pub mod data;
pub mod heads;
pub mod loss;
pub mod model;
pub mod params;
pub mod pooling;
pub mod train;

pub use ablation::{ablation_harness, ablation_samples, AblationReport, AblationSamples, Strategy, TaskAblation};
pub use data::{study_input, study_targets, videos_input};
pub use heads::{backward_heads, forward_heads, HeadOutput};
pub use loss::{bce_with_logits, huber, multitask_loss, LossParts, StudyTargets};
pub use model::MilModel;
pub use params::{HeadConfig, MilParams, PoolingConfig, PoolingMode, HEAD_OUTPUTS, HEAD_TENSORS};
pub use pooling::{pool_backward, pool_forward, PooledStudyState, StudyInput};
pub use train::{train_heads, train_on, EpochRecord, SplitData, TrainConfig, TrainedMil};
