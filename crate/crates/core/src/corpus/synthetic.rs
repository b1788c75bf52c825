//! Gaussian-cluster corpora for end-to-end checks.
//!
//! Class `k` is centered at `cos(kφ)·u + sin(kφ)·v` for orthonormal `u, v`:
//! the centers lie on an arc in label order, so adjacent labels are the most
//! similar, as with graded truthfulness. Points add Gaussian noise of standard
//! deviation `std` along each of `noise_rank` orthonormal directions, the first
//! two being `u` and `v`. `noise_rank = dim` gives isotropic noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{split_random, Corpus, CorpusManifest, EmbeddingMatrix, Record, Split, SplitFractions};
use crate::graph::SimilarityGraph;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub nodes: usize,
    pub dim: usize,
    pub classes: usize,
    pub std: f64,
    /// Angle in radians between consecutive centers.
    pub center_angle: f64,
    pub noise_rank: usize,
    pub fractions: SplitFractions,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    /// Four clusters in 64 dimensions where about 98% of the edges at
    /// τ = 0.85 join same-class points. Doubling `std` gives a setting with
    /// substantial overlap between adjacent labels.
    fn default() -> Self {
        Self {
            nodes: 800,
            dim: 64,
            classes: 4,
            std: 0.15,
            center_angle: 0.9,
            noise_rank: 8,
            fractions: SplitFractions::default(),
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// Same clusters with the noise scaled by `factor`.
    pub fn with_noise_scale(mut self, factor: f64) -> Self {
        self.std *= factor;
        self
    }
}

fn orthonormal_basis(count: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
}

/// Generates a labeled corpus with balanced classes (`label = i mod classes`)
/// and a random 70/15/15 split.
pub fn generate(config: &SyntheticConfig) -> Result<Corpus> {
    if config.classes < 2 || config.dim < 2 || config.nodes < 3 {
        return Err(Error::InvalidArgument(format!(
            "synthetic corpus needs classes >= 2, dim >= 2 and nodes >= 3: {config:?}"
        )));
    }
    let span = config.center_angle * (config.classes - 1) as f64;
    if !(config.center_angle > 0.0)
        || span >= std::f64::consts::PI
        || !(config.std >= 0.0)
        || config.noise_rank == 0
        || config.noise_rank > config.dim
    {
        return Err(Error::InvalidArgument(format!("bad synthetic parameters: {config:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let basis = orthonormal_basis(config.noise_rank.max(2), config.dim, &mut rng);
    let centers: Vec<Vec<f64>> = (0..config.classes)
        .map(|k| {
            let (sin, cos) = (k as f64 * config.center_angle).sin_cos();
            basis[0].iter().zip(&basis[1]).map(|(u, v)| cos * u + sin * v).collect()
        })
        .collect();

    let mut values = Vec::with_capacity(config.nodes * config.dim);
    let mut records = Vec::with_capacity(config.nodes);
    for i in 0..config.nodes {
        let label = i % config.classes;
        let mut x = centers[label].clone();
        for dir in &basis[..config.noise_rank] {
            let z: f64 = StandardNormal.sample(&mut rng);
            x.iter_mut().zip(dir).for_each(|(v, u)| *v += config.std * z * u);
        }
        values.extend(x.iter().map(|&v| v as f32));
        records.push(Record {
            id: format!("syn-{i:05}"),
            label: Some(label as u32),
            split: Split::Unlabeled,
            text: None,
        });
    }
    let embeddings = EmbeddingMatrix::new(config.nodes, config.dim, values)?;
    let mut manifest = CorpusManifest::new(config.classes, config.dim);
    manifest.provenance = format!(
        "synthetic: {} gaussian clusters on an arc, std {}, center angle {}, noise rank {}, seed {}",
        config.classes, config.std, config.center_angle, config.noise_rank, config.seed
    );
    let corpus = Corpus::new(records, embeddings, manifest)?;
    split_random(&corpus, config.fractions, config.seed, false)
}

/// Fraction of undirected edges whose endpoints share a label.
/// `None` for an edgeless graph.
pub fn intra_class_edge_fraction(graph: &SimilarityGraph, labels: &[Option<u32>]) -> Option<f64> {
    let (mut same, mut total) = (0usize, 0usize);
    for u in 0..graph.num_nodes() {
        for (v, _) in graph.neighbors(u) {
            if (v as usize) > u {
                total += 1;
                if labels[u].is_some() && labels[u] == labels[v as usize] {
                    same += 1;
                }
            }
        }
    }
    (total > 0).then(|| same as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generates_balanced_split_corpus() {
        let c = generate(&SyntheticConfig::default()).unwrap();
        assert_eq!(c.len(), 800);
        assert_eq!(c.embeddings().dim(), 64);
        assert_eq!(c.indices_of(Split::Test).len(), 120);
        let zeros = c.records().iter().filter(|r| r.label == Some(0)).count();
        assert_eq!(zeros, 200);
    }

    #[test]
    fn deterministic() {
        let cfg = SyntheticConfig {
            nodes: 40,
            seed: 5,
            ..Default::default()
        };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
    }
}
