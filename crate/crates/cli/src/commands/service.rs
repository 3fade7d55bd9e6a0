use std::fs::{self, OpenOptions};
use std::path::Path;

use coro_core::checkpoint::Checkpoint;
use coro_core::inference::{infer_study, parse_bundle, InferenceModel};
use coro_core::mil::MilModel;
use coro_core::report::OperatingThresholds;
use coro_core::study::EmbeddingStore;
use sha2::{Digest, Sha256};

use super::{emit, required, to_json};
use crate::args::{Global, InferArgs, ServeArgs};
use crate::error::{io_err, CliError, Result};
use crate::server::{router, AppState};

/// Loads the checkpoint, optional thresholds and optional embedding store.
/// The model version is the crate version plus a digest of the checkpoint.
pub fn load_inference_model(
    checkpoint: &Path,
    thresholds: Option<&Path>,
    store: Option<&Path>,
    encoder_seed: u64,
) -> Result<InferenceModel> {
    let bytes = fs::read(checkpoint).map_err(io_err(checkpoint))?;
    let model = MilModel::from_checkpoint(&Checkpoint::from_bytes(&bytes)?)?;
    let digest = Sha256::digest(&bytes);
    let short: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    let mut m = InferenceModel::new(model, format!("{}+{short}", env!("CARGO_PKG_VERSION")));
    if let Some(p) = thresholds {
        let text = fs::read_to_string(p).map_err(io_err(p))?;
        m.thresholds = serde_json::from_str::<OperatingThresholds>(&text)
            .map_err(|source| CliError::Json { path: p.to_path_buf(), source })?;
    }
    if let Some(p) = store {
        m.store = Some(EmbeddingStore::read(p)?);
    }
    m.encoder_seed = encoder_seed;
    Ok(m)
}

pub fn infer(g: &Global, a: &InferArgs) -> Result<()> {
    let model = load_inference_model(
        required(&g.checkpoint, "checkpoint")?,
        a.thresholds.as_deref(),
        g.embeddings.as_deref(),
        g.seed,
    )?;
    let bytes = fs::read(&a.input).map_err(io_err(&a.input))?;
    let result = infer_study(&parse_bundle(&bytes)?, &model)?;
    emit(g, &to_json(&result)?)
}

pub fn serve(g: &Global, a: &ServeArgs) -> Result<()> {
    if a.max_concurrent == 0 {
        return Err(CliError::Usage("--max-concurrent must be at least 1".into()));
    }
    let model = load_inference_model(
        required(&g.checkpoint, "checkpoint")?,
        a.thresholds.as_deref(),
        g.embeddings.as_deref(),
        g.seed,
    )?;
    let log = match &a.latency_log {
        Some(p) => Some(OpenOptions::new().create(true).append(true).open(p).map_err(io_err(p))?),
        None => None,
    };
    let version = model.version.clone();
    let app = router(AppState::new(model, a.max_concurrent, log));
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Server(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(a.bind).await.map_err(io_err(a.bind.to_string()))?;
        let addr = listener.local_addr().map_err(|e| CliError::Server(e.to_string()))?;
        log::info!("model {version} listening on http://{addr}");
        eprintln!("listening on http://{addr}");
        axum::serve(listener, app).await.map_err(|e| CliError::Server(e.to_string()))
    })
}
