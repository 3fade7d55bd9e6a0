//! Study-embedding analytics: distances, longitudinal progression,
//! clustering and principal components.

pub mod cluster;
pub mod pairs;
pub mod pca;
pub mod progression;

pub use cluster::{cluster_purity, elbow, kmeans, silhouette, ClusterPurity, KMeansResult};
pub use pairs::{consecutive_pairs, has_intervention, mean_phase_embedding};
pub use pca::{pca, Pca};
pub use progression::{
    classify_progression, embedding_distance, progression_report, Comparison, PairRow, ProgressionReport,
    ProgressionStatus, StatusSummary, StudyPairObservation,
};
