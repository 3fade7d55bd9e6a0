use std::collections::HashSet;

use coro_core::inference::*;
use coro_core::mil::{HeadConfig, MilModel, PoolingConfig, PoolingMode};
use coro_core::numerics::Rng;
use coro_core::{Error, EMBED_DIM};
use serde_json::json;

fn model() -> InferenceModel {
    let pooling = PoolingConfig { mode: PoolingMode::AttentionCls, hidden_dim: 32, num_heads: 4, seed: 1, ..Default::default() };
    InferenceModel::new(MilModel::new(pooling, HeadConfig::default(), EMBED_DIM).unwrap(), "test-1")
}

fn video(id: &str, t: f64, artery: &str, primary: f64, secondary: f64, equipment: &str) -> serde_json::Value {
    json!({
        "video_id": id,
        "acquired_at": t,
        "primary_angle_deg": primary,
        "secondary_angle_deg": secondary,
        "fps": 15.0,
        "frame_count": 60,
        "contrast": true,
        "equipment": equipment,
        "artery": artery,
    })
}

fn bundle(videos: Vec<serde_json::Value>) -> Vec<u8> {
    serde_json::to_vec(&json!({
        "study": {"study_id": "S1", "patient_id": "P1", "dominance": "right", "videos": videos}
    }))
    .unwrap()
}

fn five_videos() -> Vec<serde_json::Value> {
    vec![
        video("v1", 1.0, "LCA", -30.0, 30.0, "none"),
        video("v2", 2.0, "LCA", 40.0, -25.0, "none"),
        video("v3", 3.0, "LCA", 0.0, 0.0, "none"),
        video("v4", 4.0, "RCA", 35.0, 0.0, "none"),
        video("v5", 5.0, "RCA", -30.0, 0.0, "none"),
    ]
}

#[test]
fn five_video_study_scores_every_segment() {
    let b = parse_bundle(&bundle(five_videos())).unwrap();
    let r = infer_study(&b, &model()).unwrap();
    assert_eq!(r.segments.len(), 18);
    assert_eq!(r.videos.len(), 5);
    let total: f64 = r.videos.iter().map(|v| v.weight).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(r.videos.iter().all(|v| v.weight > 0.0));
    for s in &r.segments {
        for p in [s.p_stenosis, s.p_calcification, s.p_thrombus, s.p_cto] {
            assert!((0.0..=1.0).contains(&p));
        }
    }
    assert!(!r.report.is_empty());
    assert_eq!(r.model_version, "test-1");
    assert!(r.latency_ms.total >= r.latency_ms.pool);
}

#[test]
fn inference_is_deterministic() {
    let b = parse_bundle(&bundle(five_videos())).unwrap();
    let m = model();
    let a = infer_study(&b, &m).unwrap().without_latency();
    let c = infer_study(&b, &m).unwrap().without_latency();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
}

#[test]
fn post_procedural_only_study_has_no_diagnostic_content() {
    let videos = vec![
        video("v1", 1.0, "LCA", -30.0, 30.0, "wire"),
        video("v2", 2.0, "LCA", 40.0, -25.0, "device"),
        video("v3", 3.0, "RCA", 35.0, 0.0, "wire"),
        video("v4", 4.0, "RCA", 35.0, 0.0, "none"),
    ];
    let b = parse_bundle(&bundle(videos)).unwrap();
    let e = infer_study(&b, &model()).unwrap_err();
    assert!(matches!(e, Error::NoDiagnosticContent), "{e}");
    assert!(e.is_validation());
}

#[test]
fn inline_embeddings_take_precedence() {
    let mut b = parse_bundle(&bundle(five_videos())).unwrap();
    let m = model();
    let stub = infer_study(&b, &m).unwrap();
    let mut rng = Rng::new(3);
    b.embeddings.insert("v1".into(), (0..EMBED_DIM).map(|_| rng.normal()).collect());
    let inline = infer_study(&b, &m).unwrap();
    assert_ne!(stub.segments, inline.segments);
    b.embeddings.insert("v2".into(), vec![0.0; 3]);
    assert!(matches!(infer_study(&b, &m), Err(Error::DimensionMismatch(_))));
}

#[test]
fn schema_errors_carry_the_field_path() {
    let mut v = five_videos();
    v[2]["fps"] = json!("fast");
    match parse_bundle(&bundle(v)) {
        Err(Error::Schema { path, .. }) => assert_eq!(path, "study.videos[2].fps"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_bundle(br#"{"study": 1, "extra": 2}"#), Err(Error::Schema { .. })));
}

#[test]
fn stub_encoder_has_no_collisions() {
    let mut rng = Rng::new(10);
    let mut seen = HashSet::new();
    for _ in 0..10_000 {
        let f: Vec<f64> = (0..7).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let e = stub_encode(&f, 0, 64).unwrap();
        assert!((e.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(seen.insert(e.iter().map(|x| x.to_bits()).collect::<Vec<_>>()));
    }
}
