use coro_core::acquisition::classify_view;
use coro_core::analytics::{
    cluster_purity, consecutive_pairs, Comparison, elbow, kmeans, pca, progression_report, silhouette, ClusterPurity,
    StatusSummary,
};
use coro_core::numerics::DenseMatrix;
use serde::Serialize;

use super::{csv_string, load_cohort, out_dir, write_bytes, write_json};
use crate::args::{ClusterArgs, Global, ProgressionArgs};
use crate::error::{CliError, Result};

#[derive(Serialize)]
struct ProgressionSummary {
    n_pairs: usize,
    groups: Vec<StatusSummary>,
    comparisons: Vec<Comparison>,
    notices: Vec<String>,
}

pub fn progression(g: &Global, a: &ProgressionArgs) -> Result<()> {
    let cohort = load_cohort(g)?;
    let pairs = consecutive_pairs(&cohort)?;
    if pairs.is_empty() {
        return Err(CliError::Usage("no patient has two labelled studies".into()));
    }
    let report = progression_report(&pairs, a.bootstrap, g.seed)?;
    let table = csv_string(|w| {
        w.write_record(["patient_id", "earlier_study", "later_study", "pci_between", "status", "distance"])?;
        for r in &report.rows {
            w.write_record([
                r.patient_id.clone(),
                r.earlier_study.clone(),
                r.later_study.clone(),
                r.pci_between.to_string(),
                r.status.as_str().to_string(),
                r.distance.to_string(),
            ])?;
        }
        Ok(())
    })?;
    let dir = out_dir(g)?;
    write_bytes(&dir.join("progression.csv"), table.as_bytes())?;
    write_json(
        &dir.join("progression.json"),
        &ProgressionSummary {
            n_pairs: report.rows.len(),
            groups: report.groups,
            comparisons: report.comparisons,
            notices: report.notices,
        },
    )
}

#[derive(Serialize)]
struct ClusterSummary {
    n_videos: usize,
    k: usize,
    inertia: f64,
    iterations: usize,
    silhouette: f64,
    elbow: Vec<(usize, f64)>,
    pca_components: usize,
    explained_variance_ratio: Vec<f64>,
    purity_by_artery: Vec<ClusterPurity>,
    purity_by_view: Vec<ClusterPurity>,
}

pub fn cluster(g: &Global, a: &ClusterArgs) -> Result<()> {
    let cohort = load_cohort(g)?;
    let mut ids = Vec::new();
    let mut arteries = Vec::new();
    let mut views = Vec::new();
    let mut rows = Vec::new();
    for s in &cohort.studies {
        for v in s.videos.iter().filter(|v| v.contrast && v.embedding_ref.is_some()) {
            let view = match v.view_class {
                Some(c) => c,
                None => classify_view(v.primary_angle_deg, v.secondary_angle_deg)?,
            };
            ids.push(v.video_id.clone());
            arteries.push(v.artery.as_str().to_string());
            views.push(view.name().to_string());
            rows.push(cohort.video_embedding(v)?);
        }
    }
    if rows.len() < a.k.max(3) {
        return Err(CliError::Usage(format!("{} videos are too few for k = {}", rows.len(), a.k)));
    }
    let data = DenseMatrix::from_rows(&rows)?;
    let fit = kmeans(&data, a.k, g.seed, a.max_iter)?;
    let sil = silhouette(&data, &fit.assignments)?;
    let ks: Vec<usize> = a.elbow.iter().copied().filter(|&k| k >= 1 && k <= rows.len()).collect();
    let curve = elbow(&data, &ks, g.seed, a.max_iter)?;
    let n_components = a.pca.min(rows.len() - 1).min(data.cols()).max(1);
    let projection = pca(&data, n_components)?;
    let purity = |cats: &[String]| match cluster_purity(&fit.assignments, cats, a.k) {
        Ok(p) => Ok(p),
        Err(coro_core::Error::EmptyGroup(m)) => {
            log::warn!("purity skipped: {m}");
            Ok(Vec::new())
        }
        Err(e) => Err(e),
    };
    let table = csv_string(|w| {
        w.write_record(["video_id", "artery", "view", "cluster", "pc1", "pc2"])?;
        for i in 0..ids.len() {
            let pc = projection.projected.row(i);
            w.write_record([
                ids[i].clone(),
                arteries[i].clone(),
                views[i].clone(),
                fit.assignments[i].to_string(),
                pc[0].to_string(),
                pc.get(1).map(|x| x.to_string()).unwrap_or_default(),
            ])?;
        }
        Ok(())
    })?;
    let summary = ClusterSummary {
        n_videos: ids.len(),
        k: a.k,
        inertia: fit.inertia,
        iterations: fit.iterations,
        silhouette: sil,
        elbow: curve,
        pca_components: n_components,
        explained_variance_ratio: projection.explained_variance_ratio.clone(),
        purity_by_artery: purity(&arteries)?,
        purity_by_view: purity(&views)?,
    };
    let dir = out_dir(g)?;
    write_bytes(&dir.join("cluster_assignments.csv"), table.as_bytes())?;
    write_json(&dir.join("cluster_summary.json"), &summary)
}
