use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use coro_core::contrastive::LossKind;
use coro_core::mil::PoolingMode;
use coro_core::study::{Dominance, Split, Territory};

#[derive(Debug, Parser)]
#[command(name = "coro", version, about = "Study-level coronary angiography pipeline over video embeddings")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Cohort manifest (JSON).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Video embedding store (DCEM).
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    /// Text embedding store (DCEM); reports are hashed when absent.
    #[arg(long, global = true)]
    pub text_embeddings: Option<PathBuf>,
    /// Weight file (DCW1).
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort: manifest.json, videos.dcem, texts.dcem.
    Synth(SynthArgs),
    /// Assign patients to train/val/test and write the updated manifest.
    Split(SplitArgs),
    /// Map projection angles to view classes.
    ClassifyViews(ClassifyArgs),
    /// Per-video procedural phase and diagnostic selection.
    Phases(PhasesArgs),
    /// Parse territory reports into segment labels.
    ParseReports(ParseArgs),
    /// Train the video/report projection heads.
    TrainContrastive(ContrastiveArgs),
    /// Train multi-video pooling and the segment heads.
    TrainHeads(HeadsArgs),
    /// Evaluate a pooling/heads checkpoint on one split.
    Eval(EvalArgs),
    /// Single-video vs study-average vs attention AUROC table.
    Ablate(AblateArgs),
    /// Embedding distance between consecutive studies by progression status.
    Progression(ProgressionArgs),
    /// k-means, silhouette, PCA and purity over video embeddings.
    Cluster(ClusterArgs),
    /// Run the HTTP inference service.
    Serve(ServeArgs),
    /// Score one inference bundle.
    Infer(InferArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub patients: usize,
    #[arg(long, default_value_t = 4)]
    pub min_videos: usize,
    #[arg(long, default_value_t = 10)]
    pub max_videos: usize,
    #[arg(long, default_value_t = 0.3)]
    pub noise_sd: f64,
    /// Probability that a well-projected view shows a lesion.
    #[arg(long, default_value_t = 0.6)]
    pub view_informativeness: f64,
    #[arg(long, default_value_t = 0)]
    pub followups: usize,
    #[arg(long, default_value_t = 0.2)]
    pub procedural_fraction: f64,
    #[arg(long)]
    pub stenosis_prevalence: Option<f64>,
    #[arg(long)]
    pub cto_prevalence: Option<f64>,
    /// Also split patients with these train,val,test ratios.
    #[arg(long, value_delimiter = ',')]
    pub split: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.7, 0.15, 0.15])]
    pub ratios: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Ad hoc "primary,secondary" pairs instead of a manifest.
    #[arg(long = "angles", allow_hyphen_values = true)]
    pub angles: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PhasesArgs {
    #[arg(long, default_value_t = coro_core::MAX_VIDEOS)]
    pub max_videos: usize,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Parse a single report file instead of the manifest reports.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_from_str::<Territory>)]
    pub territory: Option<Territory>,
    #[arg(long, default_value = "right", value_parser = parse_from_str::<Dominance>)]
    pub dominance: Dominance,
}

#[derive(Debug, Args)]
pub struct ContrastiveArgs {
    #[arg(long, default_value = "clip", value_parser = parse_from_str::<LossKind>)]
    pub loss: LossKind,
    #[arg(long, default_value_t = 0.11)]
    pub temperature: f64,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 3e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.1)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 40)]
    pub batch_size: usize,
    #[arg(long, default_value_t = coro_core::EMBED_DIM)]
    pub output_dim: usize,
}

#[derive(Debug, Args)]
pub struct HeadsArgs {
    #[arg(long, default_value = "attention_cls", value_parser = parse_from_str::<PoolingMode>)]
    pub pooling: PoolingMode,
    #[arg(long, default_value_t = coro_core::EMBED_DIM)]
    pub hidden: usize,
    #[arg(long, default_value_t = 8)]
    pub heads: usize,
    #[arg(long, default_value_t = 0.15)]
    pub dropout: f64,
    #[arg(long, default_value_t = coro_core::MAX_VIDEOS)]
    pub max_videos: usize,
    #[arg(long)]
    pub view_embedding: bool,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    /// Keep pooling weights from --checkpoint fixed and train the heads only.
    #[arg(long)]
    pub freeze_pooling: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, default_value = "test", value_parser = parse_from_str::<Split>)]
    pub split: Split,
    #[arg(long, default_value_t = coro_core::stats::DEFAULT_BOOTSTRAP_ITERATIONS)]
    pub bootstrap: usize,
    /// Second checkpoint to compare against with DeLong's test.
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long, default_value = "test", value_parser = parse_from_str::<Split>)]
    pub split: Split,
}

#[derive(Debug, Args)]
pub struct ProgressionArgs {
    #[arg(long, default_value_t = coro_core::stats::DEFAULT_BOOTSTRAP_ITERATIONS)]
    pub bootstrap: usize,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long, default_value_t = 12)]
    pub k: usize,
    /// k values for the inertia curve.
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 6, 8, 10, 12, 14, 16])]
    pub elbow: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub pca: usize,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    #[arg(long, default_value_t = 4)]
    pub max_concurrent: usize,
    /// Append-only JSON-lines latency log.
    #[arg(long)]
    pub latency_log: Option<PathBuf>,
    /// Operating thresholds JSON as written by `eval`.
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// InferenceBundle JSON file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
}

fn parse_from_str<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}
