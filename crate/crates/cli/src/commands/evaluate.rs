use std::collections::BTreeSet;

use coro_core::mil::{ablation_harness, MilModel, SplitData, Strategy};
use coro_core::report::OperatingThresholds;
use coro_core::stats::{
    auprc, auroc, delong_test, macro_average, metric_report, regression_metrics, split_columns,
    youden_operating_point, DelongResult, MacroAverage, MetricReport, OperatingPoint, RegressionMetrics, ScoredSample,
};
use coro_core::study::{BinaryTask, Cohort, Segment, Split, N_SEGMENTS};
use serde::Serialize;

use super::{csv_string, load_cohort, load_model, opt, out_dir, required, write_bytes, write_json};
use crate::args::{AblateArgs, EvalArgs, Global};
use crate::error::Result;

/// Pooled predictions for every study of a split.
struct Predictions {
    /// Indexed by [`BinaryTask::index`].
    tasks: [Vec<ScoredSample>; 4],
    stenosis_pred: Vec<f64>,
    stenosis_true: Vec<f64>,
    n_studies: usize,
    n_patients: usize,
}

fn predict_split(cohort: &Cohort, model: &MilModel, split: Split) -> Result<Predictions> {
    let data = SplitData::build(cohort, split, model.pooling.max_videos, None)?;
    let mut tasks: [Vec<ScoredSample>; 4] = Default::default();
    let (mut stenosis_pred, mut stenosis_true) = (Vec::new(), Vec::new());
    for k in 0..data.len() {
        let (_, out) = model.predict(&data.inputs[k])?;
        let targets = &data.targets[k];
        for i in 0..N_SEGMENTS {
            let seg = Segment::from_index(i).expect("segment index");
            for task in BinaryTask::ALL {
                tasks[task.index()].push(ScoredSample {
                    patient_id: data.patient_ids[k].clone(),
                    segment: seg.id().to_string(),
                    score: out.probability(task, i),
                    label: targets.binary[task.index()][i],
                });
            }
            stenosis_pred.push(out.stenosis_pct_raw(i));
            stenosis_true.push(100.0 * targets.stenosis[i]);
        }
    }
    let n_patients = data.patient_ids.iter().collect::<BTreeSet<_>>().len();
    Ok(Predictions { tasks, stenosis_pred, stenosis_true, n_studies: data.len(), n_patients })
}

#[derive(Serialize)]
struct MacroRow {
    task: &'static str,
    metric: &'static str,
    #[serde(flatten)]
    value: MacroAverage,
}

#[derive(Serialize)]
struct TaskPoint {
    task: &'static str,
    #[serde(flatten)]
    point: OperatingPoint,
}

#[derive(Serialize)]
struct TaskDelong {
    task: &'static str,
    #[serde(flatten)]
    result: DelongResult,
}

#[derive(Serialize)]
struct EvalSummary {
    split: Split,
    n_studies: usize,
    n_patients: usize,
    metrics: Vec<MetricReport>,
    macro_averages: Vec<MacroRow>,
    operating_points: Vec<TaskPoint>,
    stenosis_regression: Option<RegressionMetrics>,
    delong: Vec<TaskDelong>,
    notices: Vec<String>,
}

fn undefined_ok<T>(r: coro_core::Result<T>, what: &str, notices: &mut Vec<String>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_validation() => {
            notices.push(format!("{what}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn eval(g: &Global, a: &EvalArgs) -> Result<()> {
    let cohort = load_cohort(g)?;
    let model = load_model(required(&g.checkpoint, "checkpoint")?)?;
    let p = predict_split(&cohort, &model, a.split)?;
    let mut notices = Vec::new();
    let mut metrics = Vec::new();
    let mut macro_averages = Vec::new();
    let mut operating_points = Vec::new();
    let mut thresholds = OperatingThresholds::default();
    for task in BinaryTask::ALL {
        let s = &p.tasks[task.index()];
        let name = task.as_str();
        let auroc_name = format!("{name}/auroc");
        let auprc_name = format!("{name}/auprc");
        let reports = [
            metric_report(&auroc_name, s, |x: &[f64], y: &[bool]| auroc(x, y), a.bootstrap, g.seed),
            metric_report(&auprc_name, s, |x: &[f64], y: &[bool]| auprc(x, y), a.bootstrap, g.seed),
        ];
        for (r, what) in reports.into_iter().zip([&auroc_name, &auprc_name]) {
            metrics.extend(undefined_ok(r, what, &mut notices)?);
        }
        if let Some(m) = undefined_ok(macro_average(s, |x: &[f64], y: &[bool]| auroc(x, y)), &auroc_name, &mut notices)? {
            macro_averages.push(MacroRow { task: name, metric: "auroc", value: m });
        }
        let (scores, labels) = split_columns(s);
        let what = format!("{name}/youden");
        if let Some(op) = undefined_ok(youden_operating_point(&scores, &labels), &what, &mut notices)? {
            match task {
                BinaryTask::Stenosis => thresholds.stenosis = op.threshold,
                BinaryTask::Calcification => thresholds.calcification = op.threshold,
                BinaryTask::Thrombus => thresholds.thrombus = op.threshold,
                BinaryTask::Cto => thresholds.cto = op.threshold,
            }
            operating_points.push(TaskPoint { task: name, point: op });
        }
    }
    let stenosis_regression =
        undefined_ok(regression_metrics(&p.stenosis_pred, &p.stenosis_true), "stenosis/regression", &mut notices)?;

    let mut delong = Vec::new();
    if let Some(other_path) = &a.compare {
        let other = predict_split(&cohort, &load_model(other_path)?, a.split)?;
        for task in BinaryTask::ALL {
            let (sa, labels) = split_columns(&p.tasks[task.index()]);
            let (sb, _) = split_columns(&other.tasks[task.index()]);
            let what = format!("{}/delong", task.as_str());
            if let Some(r) = undefined_ok(delong_test(&sa, &sb, &labels), &what, &mut notices)? {
                delong.push(TaskDelong { task: task.as_str(), result: r });
            }
        }
    }

    let dir = out_dir(g)?;
    let table = csv_string(|w| {
        w.write_record(["metric", "value", "ci_lo", "ci_hi", "n", "n_abnormal", "undefined_replicates"])?;
        for m in &metrics {
            w.write_record([
                m.metric.clone(),
                m.value.to_string(),
                m.ci_lo.to_string(),
                m.ci_hi.to_string(),
                m.n.to_string(),
                m.n_abnormal.to_string(),
                m.undefined_replicates.to_string(),
            ])?;
        }
        Ok(())
    })?;
    write_bytes(&dir.join("metrics.csv"), table.as_bytes())?;
    let segments = csv_string(|w| {
        w.write_record(["segment", "task", "n", "n_abnormal", "auroc"])?;
        for seg in Segment::ALL {
            for task in BinaryTask::ALL {
                let (x, y): (Vec<f64>, Vec<bool>) = p.tasks[task.index()]
                    .iter()
                    .filter(|s| s.segment == seg.id())
                    .map(|s| (s.score, s.label))
                    .unzip();
                let n_abnormal = y.iter().filter(|&&l| l).count();
                w.write_record([
                    seg.id().to_string(),
                    task.as_str().to_string(),
                    y.len().to_string(),
                    n_abnormal.to_string(),
                    opt(auroc(&x, &y).ok()),
                ])?;
            }
        }
        Ok(())
    })?;
    write_bytes(&dir.join("segments.csv"), segments.as_bytes())?;
    write_json(&dir.join("thresholds.json"), &thresholds)?;
    write_json(
        &dir.join("metrics.json"),
        &EvalSummary {
            split: a.split,
            n_studies: p.n_studies,
            n_patients: p.n_patients,
            metrics,
            macro_averages,
            operating_points,
            stenosis_regression,
            delong,
            notices,
        },
    )
}

pub fn ablate(g: &Global, a: &AblateArgs) -> Result<()> {
    let cohort = load_cohort(g)?;
    let model = load_model(required(&g.checkpoint, "checkpoint")?)?;
    let report = ablation_harness(&cohort, &model, a.split)?;
    let table = csv_string(|w| {
        let mut header = vec!["task"];
        header.extend(Strategy::ALL.iter().map(|s| s.as_str()));
        header.extend(["attention_minus_single", "n_video_samples", "n_study_samples"]);
        w.write_record(&header)?;
        for t in &report.tasks {
            let delta = t.multi_video_attention.zip(t.single_video).map(|(m, s)| m - s);
            w.write_record([
                t.task.as_str().to_string(),
                opt(t.single_video),
                opt(t.study_average),
                opt(t.multi_video_attention),
                opt(delta),
                t.n_video_samples.to_string(),
                t.n_study_samples.to_string(),
            ])?;
        }
        Ok(())
    })?;
    print!("{}", render_table(&report));
    let dir = out_dir(g)?;
    write_bytes(&dir.join("ablation.csv"), table.as_bytes())?;
    write_json(&dir.join("ablation.json"), &report)
}

fn render_table(report: &coro_core::mil::AblationReport) -> String {
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into());
    let mut s = format!(
        "{:<14} {:>12} {:>14} {:>12} {:>8}\n",
        "task", "single", "study_avg", "attention", "delta"
    );
    for t in &report.tasks {
        let delta = t.multi_video_attention.zip(t.single_video).map(|(m, s)| m - s);
        s.push_str(&format!(
            "{:<14} {:>12} {:>14} {:>12} {:>8}\n",
            t.task.as_str(),
            cell(t.single_video),
            cell(t.study_average),
            cell(t.multi_video_attention),
            delta.map(|d| format!("{d:+.3}")).unwrap_or_else(|| "n/a".into())
        ));
    }
    s
}
