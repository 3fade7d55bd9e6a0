#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use coro_core::inference::InferenceModel;
use coro_core::mil::{HeadConfig, MilModel, PoolingConfig, PoolingMode};
use coro_core::EMBED_DIM;
use serde_json::json;

pub fn coro(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coro")).args(args).current_dir(cwd).output().expect("spawn coro")
}

pub fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = coro(args, cwd);
    assert!(out.status.success(), "coro {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn model() -> InferenceModel {
    let pooling = PoolingConfig { mode: PoolingMode::AttentionCls, hidden_dim: 32, num_heads: 4, seed: 1, ..Default::default() };
    InferenceModel::new(MilModel::new(pooling, HeadConfig::default(), EMBED_DIM).unwrap(), "test-model")
}

pub fn video(id: &str, t: f64, artery: &str, primary: f64, secondary: f64) -> serde_json::Value {
    json!({
        "video_id": id,
        "acquired_at": t,
        "primary_angle_deg": primary,
        "secondary_angle_deg": secondary,
        "fps": 15.0,
        "frame_count": 60,
        "contrast": true,
        "equipment": "none",
        "artery": artery,
    })
}

pub fn bundle(study_id: &str) -> serde_json::Value {
    json!({
        "study": {
            "study_id": study_id,
            "patient_id": "P1",
            "dominance": "right",
            "videos": [
                video("v1", 1.0, "LCA", -30.0, 30.0),
                video("v2", 2.0, "LCA", 40.0, -25.0),
                video("v3", 3.0, "LCA", 0.0, 0.0),
                video("v4", 4.0, "RCA", 35.0, 0.0),
                video("v5", 5.0, "RCA", -30.0, 0.0),
            ],
        }
    })
}
