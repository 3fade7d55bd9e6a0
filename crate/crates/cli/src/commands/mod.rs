mod analysis;
mod data;
mod evaluate;
mod service;
mod train;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use coro_core::checkpoint::Checkpoint;
use coro_core::mil::MilModel;
use coro_core::study::{load_manifest, Cohort, Manifest};
use serde::Serialize;

use crate::args::{Cli, Command, Global};
use crate::error::{io_err, CliError, Result};

pub use service::load_inference_model;

pub fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Synth(a) => data::synth(g, &a),
        Command::Split(a) => data::split(g, &a),
        Command::ClassifyViews(a) => data::classify_views(g, &a),
        Command::Phases(a) => data::phases(g, &a),
        Command::ParseReports(a) => data::parse_reports(g, &a),
        Command::TrainContrastive(a) => train::contrastive(g, &a),
        Command::TrainHeads(a) => train::heads(g, &a),
        Command::Eval(a) => evaluate::eval(g, &a),
        Command::Ablate(a) => evaluate::ablate(g, &a),
        Command::Progression(a) => analysis::progression(g, &a),
        Command::Cluster(a) => analysis::cluster(g, &a),
        Command::Serve(a) => service::serve(g, &a),
        Command::Infer(a) => service::infer(g, &a),
    }
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value.as_deref().ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

fn load_cohort(g: &Global) -> Result<Cohort> {
    let manifest = required(&g.manifest, "manifest")?;
    let embeddings = required(&g.embeddings, "embeddings")?;
    Ok(load_manifest(manifest, embeddings, g.text_embeddings.as_deref())?)
}

/// Manifest without embedding-store validation, for commands that only
/// look at metadata.
fn read_manifest(g: &Global) -> Result<Manifest> {
    let path = required(&g.manifest, "manifest")?;
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(Manifest::from_json(&text)?)
}

fn load_model(path: &Path) -> Result<MilModel> {
    let ck = Checkpoint::read(path)?;
    Ok(MilModel::from_checkpoint(&ck)?)
}

fn out_dir(g: &Global) -> Result<&Path> {
    let dir = required(&g.out, "out")?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    Ok(dir)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Server(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, to_json(value)?.as_bytes())
}

/// Writes to `--out` when given, else to stdout.
fn emit(g: &Global, text: &str) -> Result<()> {
    match &g.out {
        Some(p) => write_bytes(p, text.as_bytes()),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io_err("<stdout>")),
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_string(rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<String> {
    let mut w = csv_writer(Vec::new());
    rows(&mut w)?;
    let bytes = w.into_inner().map_err(|e| CliError::Server(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
