//! Cosine k-nearest-neighbor majority vote.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::EmbeddingMatrix;
use crate::graph::UnitRows;
use crate::{Error, Result};

pub const DEFAULT_K: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Larger summed similarity among tied labels, then the lower label.
    #[default]
    SimilaritySumThenLowest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    #[serde(default)]
    pub tie_break: TieBreak,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            tie_break: TieBreak::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnnOutput {
    pub labels: Vec<u32>,
    /// Vote fraction per class for each query.
    pub class_scores: Vec<Vec<f64>>,
}

pub fn knn_predict(
    train: &EmbeddingMatrix,
    train_labels: &[u32],
    queries: &EmbeddingMatrix,
    config: &KnnConfig,
) -> Result<Vec<u32>> {
    Ok(knn_classify(train, train_labels, queries, config, 0)?.labels)
}

/// Votes of the `k` most similar training rows per query. `num_classes` of 0
/// sizes the score vectors from the largest training label.
pub fn knn_classify(
    train: &EmbeddingMatrix,
    train_labels: &[u32],
    queries: &EmbeddingMatrix,
    config: &KnnConfig,
    num_classes: usize,
) -> Result<KnnOutput> {
    if train.rows() == 0 {
        return Err(Error::Data("kNN needs a nonempty training set".into()));
    }
    if train_labels.len() != train.rows() {
        return Err(Error::Data(format!(
            "{} training labels for {} rows",
            train_labels.len(),
            train.rows()
        )));
    }
    if config.k == 0 || config.k > train.rows() {
        return Err(Error::InvalidArgument(format!(
            "k must lie in [1, {}], got {}",
            train.rows(),
            config.k
        )));
    }
    if queries.dim() != train.dim() {
        return Err(Error::shape(
            "knn_predict",
            format!("query dim {} vs train dim {}", queries.dim(), train.dim()),
        ));
    }
    let classes = num_classes.max(train_labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0));
    let tr = UnitRows::new(train)?;
    let q = UnitRows::new(queries)?;
    let k = config.k;

    let per_query: Vec<(u32, Vec<f64>)> = (0..q.rows())
        .into_par_iter()
        .map(|i| {
            let mut sims: Vec<(f64, usize)> = (0..tr.rows()).map(|j| (q.similarity(i, &tr, j), j)).collect();
            sims.select_nth_unstable_by(k - 1, |a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut votes = vec![0usize; classes];
            let mut mass = vec![0.0f64; classes];
            for &(s, j) in &sims[..k] {
                let l = train_labels[j] as usize;
                votes[l] += 1;
                mass[l] += s;
            }
            let mut best = 0usize;
            for c in 1..classes {
                if votes[c] > votes[best] || (votes[c] == votes[best] && mass[c] > mass[best]) {
                    best = c;
                }
            }
            let scores = votes.iter().map(|&v| v as f64 / k as f64).collect();
            (best as u32, scores)
        })
        .collect();

    let (labels, class_scores) = per_query.into_iter().unzip();
    Ok(KnnOutput { labels, class_scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(rows: &[&[f32]]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identical_row_with_k1() {
        let tr = emb(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let q = emb(&[&[0.0, 2.0]]);
        let cfg = KnnConfig {
            k: 1,
            ..Default::default()
        };
        assert_eq!(knn_predict(&tr, &[0, 1, 2], &q, &cfg).unwrap(), vec![1]);
    }

    #[test]
    fn vote_tie_goes_to_larger_similarity_sum() {
        // query e0; label 0 neighbors sum 0.8+0.9=1.7, label 1 sum 0.95+0.95=1.9
        let at = |c: f32| [c, (1.0 - c * c).sqrt()];
        let rows = [at(0.8), at(0.9), at(0.95), at(0.95), [-1.0, 0.0]];
        let tr = emb(&rows.iter().map(|r| &r[..]).collect::<Vec<_>>());
        let q = emb(&[&[1.0, 0.0]]);
        let cfg = KnnConfig {
            k: 4,
            ..Default::default()
        };
        assert_eq!(knn_predict(&tr, &[0, 0, 1, 1, 0], &q, &cfg).unwrap(), vec![1]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let tr = emb(&[&[1.0, 0.0]]);
        let q = emb(&[&[1.0, 0.0]]);
        assert!(knn_predict(
            &tr,
            &[0],
            &q,
            &KnnConfig {
                k: 2,
                ..Default::default()
            }
        )
        .is_err());
        assert!(knn_predict(
            &tr,
            &[],
            &q,
            &KnnConfig {
                k: 1,
                ..Default::default()
            }
        )
        .is_err());
        let q3 = emb(&[&[1.0, 0.0, 0.0]]);
        assert!(knn_predict(
            &tr,
            &[0],
            &q3,
            &KnnConfig {
                k: 1,
                ..Default::default()
            }
        )
        .is_err());
    }
}
