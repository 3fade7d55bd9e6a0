use std::io;

/// Errors raised anywhere in the engine.
///
/// Variants split into validation failures (bad input, the caller can fix it)
/// and runtime failures (I/O, numerical breakdown). [`Error::is_validation`]
/// drives the CLI exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate softmax: {0}")]
    DegenerateSoftmax(&'static str),
    #[error("zero vector")]
    ZeroVector,
    #[error("non-finite objective")]
    NonFiniteObjective,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("dangling embedding_ref {reference} (store holds {count} rows)")]
    DanglingEmbedding { reference: usize, count: usize },
    #[error("duplicate study: {0}")]
    DuplicateStudy(String),
    #[error("incomplete study {0}: needs at least one LCA and one RCA contrast video")]
    IncompleteStudy(String),
    #[error("unknown dominance for study {0}")]
    UnknownDominance(String),
    #[error("cohort too small: {patients} patients for {splits} splits")]
    CohortTooSmall { patients: usize, splits: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid angle")]
    InvalidAngle,
    #[error("unsorted study {0}")]
    UnsortedStudy(String),
    #[error("no diagnostic content")]
    NoDiagnosticContent,
    #[error("unpaired territory {territory} in study {study}")]
    UnpairedTerritory { study: String, territory: String },

    #[error("unmapped descriptor '{0}'")]
    UnmappedDescriptor(String),
    #[error("report parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("incomplete prediction: missing segment {0}")]
    IncompletePrediction(String),

    #[error("unnormalized input: row {row} has norm {norm}")]
    UnnormalizedInput { row: usize, norm: f64 },
    #[error("empty candidate set")]
    EmptyCandidates,
    #[error("empty study")]
    EmptyStudy,

    #[error("undefined AUROC: single-class input")]
    UndefinedAuroc,
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("undersized group: {0}")]
    UndersizedGroup(String),
    #[error("all bootstrap replicates undefined")]
    AllReplicatesUndefined,
    #[error("empty group: {0}")]
    EmptyGroup(String),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("bad embedding store: {0}")]
    EmbeddingStore(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True when the error stems from invalid caller input rather than a
    /// runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io(_) | Error::NonFiniteObjective | Error::NonFinite(_) | Error::Checkpoint(_)
        )
    }

    /// Stable machine-readable code, used in service error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateSoftmax(_) => "degenerate_softmax",
            Error::ZeroVector => "zero_vector",
            Error::NonFiniteObjective => "non_finite_objective",
            Error::NonFinite(_) => "non_finite",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Schema { .. } => "schema_violation",
            Error::DanglingEmbedding { .. } => "dangling_embedding_ref",
            Error::DuplicateStudy(_) => "duplicate_study",
            Error::IncompleteStudy(_) => "incomplete_study",
            Error::UnknownDominance(_) => "unknown_dominance",
            Error::CohortTooSmall { .. } => "cohort_too_small",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidAngle => "invalid_angle",
            Error::UnsortedStudy(_) => "unsorted_study",
            Error::NoDiagnosticContent => "no_diagnostic_content",
            Error::UnpairedTerritory { .. } => "unpaired_territory",
            Error::UnmappedDescriptor(_) => "unmapped_descriptor",
            Error::Parse { .. } => "report_parse_error",
            Error::IncompletePrediction(_) => "incomplete_prediction",
            Error::UnnormalizedInput { .. } => "unnormalized_input",
            Error::EmptyCandidates => "empty_candidates",
            Error::EmptyStudy => "empty_study",
            Error::UndefinedAuroc => "undefined_auroc",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::LengthMismatch(..) => "length_mismatch",
            Error::UndersizedGroup(_) => "undersized_group",
            Error::AllReplicatesUndefined => "all_replicates_undefined",
            Error::EmptyGroup(_) => "empty_group",
            Error::Checkpoint(_) => "bad_checkpoint",
            Error::EmbeddingStore(_) => "bad_embedding_store",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
