use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cosine_similarity, DenseMatrix};

pub const RECALL_KS: [usize; 5] = [1, 5, 10, 25, 50];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionMetrics {
    pub n_queries: usize,
    /// Recall@K keyed by K.
    pub recall: BTreeMap<usize, f64>,
    pub mean_rank: f64,
    pub median_rank: f64,
    pub ranks: Vec<usize>,
}

impl DirectionMetrics {
    pub fn from_ranks(ranks: Vec<usize>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let n = ranks.len() as f64;
        let recall = RECALL_KS
            .iter()
            .map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / n))
            .collect();
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        let m = sorted.len();
        let median_rank = if m % 2 == 1 {
            sorted[m / 2] as f64
        } else {
            (sorted[m / 2 - 1] + sorted[m / 2]) as f64 / 2.0
        };
        Ok(Self {
            n_queries: ranks.len(),
            recall,
            mean_rank: ranks.iter().sum::<usize>() as f64 / n,
            median_rank,
            ranks,
        })
    }

    pub fn recall_at(&self, k: usize) -> f64 {
        self.recall[&k]
    }

    pub fn recall_monotone(&self) -> bool {
        self.recall.values().zip(self.recall.values().skip(1)).all(|(a, b)| a <= b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalMetrics {
    pub video_to_text: DirectionMetrics,
    pub text_to_video: DirectionMetrics,
    pub alignment: f64,
    /// Video-to-text ranks aggregated per study by the best video rank.
    pub study_video_to_text: Option<DirectionMetrics>,
}

fn similarities(video: &DenseMatrix, text: &DenseMatrix) -> Result<Vec<Vec<f64>>> {
    if video.cols() != text.cols() {
        return Err(Error::DimensionMismatch(format!("video dim {} vs text dim {}", video.cols(), text.cols())));
    }
    (0..video.rows())
        .map(|i| (0..text.rows()).map(|j| cosine_similarity(video.row(i), text.row(j))).collect())
        .collect()
}

fn check_pairing(video: &DenseMatrix, text: &DenseMatrix, pairing: &[usize]) -> Result<()> {
    if video.rows() == 0 || text.rows() == 0 {
        return Err(Error::EmptyCandidates);
    }
    if pairing.len() != video.rows() {
        return Err(Error::LengthMismatch(pairing.len(), video.rows()));
    }
    if let Some(&bad) = pairing.iter().find(|&&j| j >= text.rows()) {
        return Err(Error::InvalidArgument(format!("pairing refers to text {bad} of {}", text.rows())));
    }
    Ok(())
}

/// Video-to-text and text-to-video ranks of the true partner.
///
/// Ranks are worst-case competition ranks: a candidate tied with the true
/// one counts as ranked ahead of it. In the text-to-video direction each
/// text with at least one paired video is a query; its rank is that of the
/// best true video, and other true videos are not counted as competitors.
/// Candidate texts are the rows of `text`; deduplicate them first (see
/// [`dedup_rows`]) to treat identical reports as one candidate.
pub fn retrieval_eval(
    video: &DenseMatrix,
    text: &DenseMatrix,
    pairing: &[usize],
    study_ids: Option<&[String]>,
) -> Result<RetrievalMetrics> {
    check_pairing(video, text, pairing)?;
    let sim = similarities(video, text)?;
    let v2t: Vec<usize> = (0..video.rows())
        .map(|i| {
            let s_true = sim[i][pairing[i]];
            sim[i].iter().filter(|&&s| s >= s_true).count()
        })
        .collect();
    let mut t2v = Vec::new();
    for j in 0..text.rows() {
        let truth: Vec<usize> = (0..video.rows()).filter(|&i| pairing[i] == j).collect();
        let Some(best) = truth.iter().map(|&i| sim[i][j]).reduce(f64::max) else {
            continue;
        };
        let ahead = (0..video.rows()).filter(|&i| pairing[i] != j && sim[i][j] >= best).count();
        t2v.push(ahead + 1);
    }
    let study_video_to_text = match study_ids {
        Some(ids) => {
            if ids.len() != video.rows() {
                return Err(Error::LengthMismatch(ids.len(), video.rows()));
            }
            let mut best: BTreeMap<&str, usize> = BTreeMap::new();
            for (id, &r) in ids.iter().zip(&v2t) {
                let e = best.entry(id.as_str()).or_insert(r);
                *e = (*e).min(r);
            }
            Some(DirectionMetrics::from_ranks(best.into_values().collect())?)
        }
        None => None,
    };
    Ok(RetrievalMetrics {
        video_to_text: DirectionMetrics::from_ranks(v2t)?,
        text_to_video: DirectionMetrics::from_ranks(t2v)?,
        alignment: alignment_score(video, text, pairing)?,
        study_video_to_text,
    })
}

/// Mean cosine similarity over true pairs.
pub fn alignment_score(video: &DenseMatrix, text: &DenseMatrix, pairing: &[usize]) -> Result<f64> {
    check_pairing(video, text, pairing)?;
    let mut total = 0.0;
    for (i, &j) in pairing.iter().enumerate() {
        total += cosine_similarity(video.row(i), text.row(j))?;
    }
    Ok(total / pairing.len() as f64)
}

/// Collapses rows with equal keys. Returns the first row of each key and,
/// for every input row, the index of its unique row.
pub fn dedup_rows<K: Ord + Clone>(rows: &DenseMatrix, keys: &[K]) -> Result<(DenseMatrix, Vec<usize>)> {
    if keys.len() != rows.rows() {
        return Err(Error::LengthMismatch(keys.len(), rows.rows()));
    }
    let mut first: BTreeMap<K, usize> = BTreeMap::new();
    let mut keep = Vec::new();
    let mut map = Vec::with_capacity(keys.len());
    for (i, k) in keys.iter().enumerate() {
        let next = keep.len();
        let u = *first.entry(k.clone()).or_insert_with(|| {
            keep.push(i);
            next
        });
        map.push(u);
    }
    Ok((rows.select_rows(&keep), map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_pairing() {
        let e = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let r = retrieval_eval(&e, &e, &[0, 1, 2], None).unwrap();
        assert_eq!(r.video_to_text.recall_at(1), 1.0);
        assert_eq!(r.video_to_text.median_rank, 1.0);
        assert_eq!(r.alignment, 1.0);
    }

    #[test]
    fn ranks_one_two_one() {
        let t = m(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]]);
        let v = m(&[&[1.0, 0.1], &[1.0, 0.5], &[-1.0, 0.0]]);
        let r = retrieval_eval(&v, &t, &[0, 1, 2], None).unwrap();
        assert_eq!(r.video_to_text.ranks, vec![1, 2, 1]);
        assert!((r.video_to_text.recall_at(1) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.video_to_text.recall_at(5), 1.0);
        assert_eq!(r.video_to_text.median_rank, 1.0);
    }

    #[test]
    fn adversarial_all_last() {
        let t = m(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]]);
        let v = m(&[&[-1.0, 0.0], &[0.0, -1.0], &[1.0, 0.0]]);
        let r = retrieval_eval(&v, &t, &[0, 1, 2], None).unwrap();
        assert!(r.video_to_text.ranks.iter().all(|&x| x == 3));
        assert_eq!(r.video_to_text.recall_at(1), 0.0);
    }

    #[test]
    fn ties_take_worst_rank_and_dedup_resolves_them() {
        let t = m(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let v = m(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let r = retrieval_eval(&v, &t, &[0, 1], None).unwrap();
        assert_eq!(r.video_to_text.ranks, vec![2, 2]);
        let (u, map) = dedup_rows(&t, &["a", "a"]).unwrap();
        assert_eq!(u.rows(), 1);
        let r = retrieval_eval(&v, &u, &map, None).unwrap();
        assert_eq!(r.video_to_text.ranks, vec![1, 1]);
        assert_eq!(r.text_to_video.ranks, vec![1]);
    }

    #[test]
    fn alignment_examples() {
        let v = m(&[&[1.0, 0.0], &[0.6, 0.8]]);
        let t = m(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!((alignment_score(&v, &t, &[0, 1]).unwrap() - 0.8).abs() < 1e-15);
        let o = m(&[&[0.0, 1.0]]);
        assert_eq!(alignment_score(&m(&[&[1.0, 0.0]]), &o, &[0]).unwrap(), 0.0);
        assert!(alignment_score(&DenseMatrix::zeros(0, 2), &o, &[]).is_err());
    }

    #[test]
    fn study_level_uses_best_video() {
        let t = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let v = m(&[&[0.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let ids = vec!["s1".to_string(), "s1".to_string(), "s2".to_string()];
        let r = retrieval_eval(&v, &t, &[0, 0, 1], Some(&ids)).unwrap();
        assert_eq!(r.video_to_text.ranks, vec![2, 1, 1]);
        assert_eq!(r.study_video_to_text.unwrap().ranks, vec![1, 1]);
    }
}
