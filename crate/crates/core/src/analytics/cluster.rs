use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Rng};

/// Relative slack allowed when checking that inertia never increases.
const INERTIA_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: DenseMatrix,
    pub inertia: f64,
    /// Inertia after each Lloyd iteration.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centroids: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(x, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(data: &DenseMatrix, k: usize, rng: &mut Rng) -> DenseMatrix {
    let n = data.rows();
    let mut chosen = vec![rng.below(n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(data.row(i), data.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All remaining points coincide with a centre.
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(data.row(i), data.row(next)));
        }
    }
    data.select_rows(&chosen)
}

/// k-means with k-means++ seeding and Lloyd iterations. A cluster that
/// loses all its points keeps its previous centroid.
pub fn kmeans(data: &DenseMatrix, k: usize, seed: u64, max_iter: usize) -> Result<KMeansResult> {
    let n = data.rows();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds the {n} points")));
    }
    if !data.is_finite() {
        return Err(Error::NonFinite("k-means input"));
    }
    let mut rng = Rng::new(seed);
    let mut centroids = plus_plus_init(data, k, &mut rng);
    let mut assignments: Vec<usize> = (0..n).map(|i| nearest(data.row(i), &centroids).0).collect();
    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let mut sums = DenseMatrix::zeros(k, data.cols());
        let mut counts = vec![0usize; k];
        for (i, &a) in assignments.iter().enumerate() {
            counts[a] += 1;
            for (s, x) in sums.row_mut(a).iter_mut().zip(data.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, a) in assignments.iter_mut().enumerate() {
            let (c, d) = nearest(data.row(i), &centroids);
            if c != *a && d < sq_dist(data.row(i), centroids.row(*a)) {
                *a = c;
                changed = true;
            }
            inertia += sq_dist(data.row(i), centroids.row(*a));
        }
        if let Some(&prev) = history.last() {
            assert!(
                inertia <= prev + INERTIA_SLACK * prev.max(1.0),
                "k-means inertia increased from {prev} to {inertia}"
            );
        }
        history.push(inertia);
        if !changed {
            break;
        }
    }
    let inertia = *history.last().expect("at least one iteration");
    Ok(KMeansResult { assignments, centroids, inertia, inertia_history: history, iterations })
}

/// Final inertia for each `k`, for an elbow plot.
pub fn elbow(data: &DenseMatrix, ks: &[usize], seed: u64, max_iter: usize) -> Result<Vec<(usize, f64)>> {
    ks.iter().map(|&k| Ok((k, kmeans(data, k, seed, max_iter)?.inertia))).collect()
}

/// Mean silhouette with Euclidean distance; singleton clusters score 0.
pub fn silhouette(data: &DenseMatrix, assignments: &[usize]) -> Result<f64> {
    let n = data.rows();
    if assignments.len() != n {
        return Err(Error::LengthMismatch(assignments.len(), n));
    }
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &a in assignments {
        *sizes.entry(a).or_default() += 1;
    }
    if sizes.len() < 2 {
        return Err(Error::UndefinedMetric("silhouette needs at least two clusters".into()));
    }
    let labels: Vec<usize> = sizes.keys().copied().collect();
    let slot = |a: usize| labels.binary_search(&a).expect("known label");
    let mut total = 0.0;
    for i in 0..n {
        let own = assignments[i];
        if sizes[&own] == 1 {
            continue;
        }
        let mut sums = vec![0.0; labels.len()];
        for j in 0..n {
            if j != i {
                sums[slot(assignments[j])] += sq_dist(data.row(i), data.row(j)).sqrt();
            }
        }
        let a = sums[slot(own)] / (sizes[&own] - 1) as f64;
        let b = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != own)
            .map(|(s, l)| sums[s] / sizes[l] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPurity {
    pub cluster: usize,
    pub n: usize,
    pub modal_category: String,
    pub purity: f64,
}

/// Fraction of each cluster's members that share its most common category.
/// Clusters are `0..k`; ties for the modal category go to the smallest name.
pub fn cluster_purity(assignments: &[usize], categories: &[String], k: usize) -> Result<Vec<ClusterPurity>> {
    if assignments.len() != categories.len() {
        return Err(Error::LengthMismatch(assignments.len(), categories.len()));
    }
    let mut counts: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); k];
    for (&a, c) in assignments.iter().zip(categories) {
        if a >= k {
            return Err(Error::InvalidArgument(format!("cluster {a} out of range for k = {k}")));
        }
        *counts[a].entry(c.as_str()).or_default() += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(cluster, m)| {
            let n: usize = m.values().sum();
            if n == 0 {
                return Err(Error::EmptyGroup(format!("cluster {cluster} is empty")));
            }
            let (cat, top) = m.iter().fold(("", 0), |best, (c, &v)| if v > best.1 { (c, v) } else { best });
            Ok(ClusterPurity { cluster, n, modal_category: cat.to_string(), purity: top as f64 / n as f64 })
        })
        .collect()
}
