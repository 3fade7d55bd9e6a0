//! Browser bindings: view classification, an ROC/Youden explorer and the
//! report parser. Every export returns a JSON string; failures become a JS
//! exception carrying the error message.
//!
//! The `*_json` functions hold the logic and run on any target.

use coro_core::acquisition::{classify_view, matching_views};
use coro_core::report::parse_report;
use coro_core::stats::{auprc, auroc, operating_point_at, youden_operating_point, OperatingPoint};
use coro_core::study::{Dominance, Territory};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn to_js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[derive(Serialize)]
struct RocPoint {
    threshold: f64,
    fpr: f64,
    tpr: f64,
}

#[derive(Serialize)]
struct RocSummary {
    n: usize,
    n_positive: usize,
    auroc: f64,
    auprc: f64,
    youden: OperatingPoint,
    at_threshold: Option<OperatingPoint>,
    curve: Vec<RocPoint>,
}

pub fn classify_view_json(primary_deg: f64, secondary_deg: f64) -> Result<String, String> {
    let view = classify_view(primary_deg, secondary_deg).map_err(|e| e.to_string())?;
    let matches: Vec<&str> = matching_views(primary_deg, secondary_deg).iter().map(|v| v.name()).collect();
    Ok(json!({ "view": view.name(), "matches": matches }).to_string())
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect()
}

fn parse_labels(text: &str) -> Result<Vec<bool>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| match t {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            _ => Err(format!("label '{t}' must be 0 or 1")),
        })
        .collect()
}

/// Scores and labels as comma- or whitespace-separated lists. `threshold`
/// is optional; NaN means none.
pub fn roc_json(scores: &str, labels: &str, threshold: f64) -> Result<String, String> {
    let s = parse_numbers(scores)?;
    let l = parse_labels(labels)?;
    let err = |e: coro_core::Error| e.to_string();
    let mut thresholds = s.clone();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut curve = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    for t in thresholds {
        let op = operating_point_at(&s, &l, t).map_err(err)?;
        curve.push(RocPoint { threshold: t, fpr: 1.0 - op.specificity, tpr: op.sensitivity });
    }
    let summary = RocSummary {
        n: s.len(),
        n_positive: l.iter().filter(|&&x| x).count(),
        auroc: auroc(&s, &l).map_err(err)?,
        auprc: auprc(&s, &l).map_err(err)?,
        youden: youden_operating_point(&s, &l).map_err(err)?,
        at_threshold: if threshold.is_nan() { None } else { Some(operating_point_at(&s, &l, threshold).map_err(err)?) },
        curve,
    };
    serde_json::to_string(&summary).map_err(|e| e.to_string())
}

pub fn parse_report_json(text: &str, territory: &str, dominance: &str) -> Result<String, String> {
    let territory = match territory.trim() {
        "" | "both" => None,
        t => Some(t.parse::<Territory>().map_err(|e| e.to_string())?),
    };
    let dominance: Dominance = dominance.parse().map_err(|e: coro_core::Error| e.to_string())?;
    let parsed = parse_report(text, territory, dominance).map_err(|e| e.to_string())?;
    serde_json::to_string(&parsed).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = classifyView)]
pub fn classify_view_js(primary_deg: f64, secondary_deg: f64) -> Result<String, JsValue> {
    to_js(classify_view_json(primary_deg, secondary_deg))
}

#[wasm_bindgen(js_name = rocExplorer)]
pub fn roc_js(scores: &str, labels: &str, threshold: f64) -> Result<String, JsValue> {
    to_js(roc_json(scores, labels, threshold))
}

#[wasm_bindgen(js_name = parseReport)]
pub fn parse_report_js(text: &str, territory: &str, dominance: &str) -> Result<String, JsValue> {
    to_js(parse_report_json(text, territory, dominance))
}
