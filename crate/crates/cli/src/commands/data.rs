use coro_core::acquisition::{assign_phases, classify_view, select_diagnostic, SelectionMode};
use coro_core::report::parse_report;
use coro_core::study::{split_by_patient, synth_cohort, Equipment, LabelPrevalences, SynthConfig, Territory};
use serde::Serialize;

use super::{csv_string, emit, load_cohort, out_dir, read_manifest, to_json, write_bytes};
use crate::args::{ClassifyArgs, Global, ParseArgs, PhasesArgs, SplitArgs, SynthArgs};
use crate::error::{io_err, CliError, Result};

fn ratios(v: &[f64]) -> Result<[f64; 3]> {
    v.try_into().map_err(|_| CliError::Usage("expected three comma-separated ratios".into()))
}

pub fn synth(g: &Global, a: &SynthArgs) -> Result<()> {
    let defaults = LabelPrevalences::default();
    let config = SynthConfig {
        n_patients: a.patients,
        videos_per_study: (a.min_videos, a.max_videos),
        prevalences: LabelPrevalences {
            stenosis: a.stenosis_prevalence.unwrap_or(defaults.stenosis),
            cto: a.cto_prevalence.unwrap_or(defaults.cto),
            ..defaults
        },
        view_informativeness: a.view_informativeness,
        noise_sd: a.noise_sd,
        followup_studies: a.followups,
        procedural_fraction: a.procedural_fraction,
        seed: g.seed,
        ..Default::default()
    };
    let mut cohort = synth_cohort(&config)?;
    if let Some(r) = &a.split {
        split_by_patient(&mut cohort, ratios(r)?, g.seed)?;
    }
    let dir = out_dir(g)?;
    write_bytes(&dir.join("manifest.json"), cohort.to_manifest().to_json()?.as_bytes())?;
    write_bytes(&dir.join("videos.dcem"), &cohort.videos.to_bytes())?;
    if let Some(t) = &cohort.texts {
        write_bytes(&dir.join("texts.dcem"), &t.to_bytes())?;
    }
    log::info!("{} studies, {} videos written to {}", cohort.studies.len(), cohort.videos.len(), dir.display());
    Ok(())
}

pub fn split(g: &Global, a: &SplitArgs) -> Result<()> {
    let mut cohort = load_cohort(g)?;
    let map = split_by_patient(&mut cohort, ratios(&a.ratios)?, g.seed)?;
    let mut counts = [0usize; 3];
    for s in map.values() {
        counts[*s as usize] += 1;
    }
    log::info!("patients train/val/test: {}/{}/{}", counts[0], counts[1], counts[2]);
    emit(g, &cohort.to_manifest().to_json()?)
}

pub fn classify_views(g: &Global, a: &ClassifyArgs) -> Result<()> {
    let text = if a.angles.is_empty() {
        let m = read_manifest(g)?;
        csv_string(|w| {
            w.write_record(["study_id", "video_id", "primary_deg", "secondary_deg", "view"])?;
            for s in &m.studies {
                for v in &s.videos {
                    let view = classify_view(v.primary_angle_deg, v.secondary_angle_deg)?;
                    w.write_record([
                        s.study_id.as_str(),
                        v.video_id.as_str(),
                        &v.primary_angle_deg.to_string(),
                        &v.secondary_angle_deg.to_string(),
                        view.name(),
                    ])?;
                }
            }
            Ok(())
        })?
    } else {
        csv_string(|w| {
            w.write_record(["primary_deg", "secondary_deg", "view"])?;
            for pair in &a.angles {
                let parsed: Vec<f64> = pair
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| CliError::Usage(format!("bad angle pair '{pair}'")))?;
                let [p, s] = parsed[..] else {
                    return Err(CliError::Usage(format!("bad angle pair '{pair}'")));
                };
                let view = classify_view(p, s)?;
                w.write_record([p.to_string().as_str(), &s.to_string(), view.name()])?;
            }
            Ok(())
        })?
    };
    emit(g, &text)
}

fn equipment_name(e: Equipment) -> &'static str {
    match e {
        Equipment::None => "none",
        Equipment::Wire => "wire",
        Equipment::Device => "device",
    }
}

pub fn phases(g: &Global, a: &PhasesArgs) -> Result<()> {
    let m = read_manifest(g)?;
    let text = csv_string(|w| {
        w.write_record(["study_id", "video_id", "artery", "equipment", "contrast", "phase", "selected"])?;
        for study in &m.studies {
            let mut s = study.clone();
            assign_phases(&mut s)?;
            let selected: Vec<String> = match select_diagnostic(&s, a.max_videos, SelectionMode::Inference) {
                Ok(sel) => sel.videos.into_iter().map(|v| v.video_id).collect(),
                Err(coro_core::Error::NoDiagnosticContent) => Vec::new(),
                Err(e) => return Err(e.into()),
            };
            for v in &s.videos {
                w.write_record([
                    s.study_id.as_str(),
                    v.video_id.as_str(),
                    v.artery.as_str(),
                    equipment_name(v.equipment),
                    if v.contrast { "true" } else { "false" },
                    v.phase.map(|p| p.as_str()).unwrap_or(""),
                    if selected.contains(&v.video_id) { "true" } else { "false" },
                ])?;
            }
        }
        Ok(())
    })?;
    emit(g, &text)
}

#[derive(Serialize)]
struct ParsedRow<'a> {
    study_id: &'a str,
    territory: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    parsed: Option<coro_core::report::ParsedReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn parse_reports(g: &Global, a: &ParseArgs) -> Result<()> {
    if let Some(path) = &a.input {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let parsed = parse_report(&text, a.territory, a.dominance)?;
        return emit(g, &to_json(&parsed)?);
    }
    let m = read_manifest(g)?;
    let mut rows = Vec::new();
    let mut failures = 0;
    for s in &m.studies {
        for t in [Territory::Lca, Territory::Rca] {
            let Some(text) = s.reports.get(t) else { continue };
            let (parsed, error) = match parse_report(text, Some(t), s.dominance) {
                Ok(p) => (Some(p), None),
                Err(e) => {
                    failures += 1;
                    (None, Some(e.to_string()))
                }
            };
            rows.push(ParsedRow { study_id: &s.study_id, territory: t.as_str(), parsed, error });
        }
    }
    if failures > 0 {
        log::warn!("{failures} reports failed to parse");
    }
    emit(g, &to_json(&rows)?)
}
