#![allow(dead_code)]

use std::collections::BTreeMap;

use halograph::corpus::{Corpus, CorpusManifest, EmbeddingMatrix, Record, Split};
use halograph::graph::SimilarityGraph;
use halograph::model::{GatConfig, ParamStore};
use halograph::training::PhaseMask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Points scattered around `clusters` random directions, so high thresholds
/// still produce edges.
pub fn clustered(rng: &mut ChaCha8Rng, n: usize, d: usize, clusters: usize, spread: f64) -> EmbeddingMatrix {
    let centers: Vec<Vec<f64>> = (0..clusters.max(1))
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect())
        .collect();
    let mut values = Vec::with_capacity(n * d);
    for _ in 0..n {
        let c = &centers[rng.random_range(0..centers.len())];
        for &cv in c {
            let z: f64 = StandardNormal.sample(&mut *rng);
            values.push((cv + spread * z) as f32);
        }
    }
    EmbeddingMatrix::new(n, d, values).unwrap()
}

/// Every pair with cosine strictly above `tau`, evaluated directly.
pub fn brute_force_edges(emb: &EmbeddingMatrix, tau: f32) -> BTreeMap<(u32, u32), f64> {
    let unit: Vec<Vec<f64>> = (0..emb.rows())
        .map(|r| {
            let row: Vec<f64> = emb.row(r).iter().map(|&v| v as f64).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.iter().map(|v| v / norm).collect()
        })
        .collect();
    let mut edges = BTreeMap::new();
    for i in 0..unit.len() {
        for j in 0..unit.len() {
            if i == j {
                continue;
            }
            let s: f64 = unit[i].iter().zip(&unit[j]).map(|(a, b)| a * b).sum();
            let s = s.clamp(-1.0, 1.0);
            if s > tau as f64 {
                edges.insert((i as u32, j as u32), s);
            }
        }
    }
    edges
}

pub fn graph_edges(g: &SimilarityGraph) -> BTreeMap<(u32, u32), f32> {
    let mut edges = BTreeMap::new();
    for u in 0..g.num_nodes() {
        for (v, w) in g.neighbors(u) {
            edges.insert((u as u32, v), w);
        }
    }
    edges
}

pub fn random_splits(rng: &mut ChaCha8Rng, n: usize) -> Vec<Split> {
    (0..n)
        .map(|_| match rng.random_range(0..10) {
            0..=4 => Split::Train,
            5 | 6 => Split::Val,
            7 | 8 => Split::Test,
            _ => Split::Unlabeled,
        })
        .collect()
}

/// Labeled corpus with the given splits; unlabeled rows carry no label.
pub fn corpus_with(emb: EmbeddingMatrix, splits: &[Split], num_classes: usize, rng: &mut ChaCha8Rng) -> Corpus {
    let records = splits
        .iter()
        .enumerate()
        .map(|(i, &split)| Record {
            id: format!("n{i}"),
            label: (split != Split::Unlabeled).then(|| rng.random_range(0..num_classes as u32)),
            split,
            text: None,
        })
        .collect();
    let manifest = CorpusManifest::new(num_classes, emb.dim());
    Corpus::new(records, emb, manifest).unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng, store: &mut ParamStore, scale: f64) {
    for t in store.tensors_mut() {
        for v in t.data_mut() {
            *v = (scale * rng.random_range(-1.0..1.0)) as f32;
        }
    }
}

/// Attention layer evaluated with dense `n × n` matrices in `f64`.
///
/// Returns the averaged head output and, per head, the dense attention matrix.
pub fn dense_gat(
    params: &ParamStore,
    cfg: &GatConfig,
    graph: &SimilarityGraph,
    x: &[Vec<f64>],
    mask: &PhaseMask,
) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
    let n = x.len();
    let mut adj = vec![vec![None::<f64>; n]; n];
    for (i, row) in adj.iter_mut().enumerate() {
        row[i] = Some(1.0);
        for (j, w) in graph.neighbors(i) {
            if mask.admissible(i, j as usize) {
                row[j as usize] = Some(w as f64);
            }
        }
    }
    let get = |name: String| -> Vec<f64> { params.get(&name).unwrap().data().iter().map(|&v| v as f64).collect() };
    let mut out = vec![vec![0.0; cfg.out_dim]; n];
    let mut alphas = Vec::new();
    for h in 0..cfg.heads {
        let w = get(GatConfig::weight_name(h));
        let a_src = get(GatConfig::att_src_name(h));
        let a_dst = get(GatConfig::att_dst_name(h));
        let a_edge = get(GatConfig::att_edge_name(h))[0];
        let z: Vec<Vec<f64>> = x
            .iter()
            .map(|xi| {
                (0..cfg.out_dim)
                    .map(|o| (0..cfg.in_dim).map(|k| xi[k] * w[k * cfg.out_dim + o]).sum())
                    .collect()
            })
            .collect();
        let dot = |v: &[f64], a: &[f64]| v.iter().zip(a).map(|(p, q)| p * q).sum::<f64>();
        let mut alpha = vec![vec![0.0; n]; n];
        for i in 0..n {
            let logits: Vec<(usize, f64)> = (0..n)
                .filter_map(|j| {
                    adj[i][j].map(|wij| {
                        let l = dot(&z[j], &a_src) + dot(&z[i], &a_dst) + a_edge * wij;
                        (j, if l >= 0.0 { l } else { cfg.slope * l })
                    })
                })
                .collect();
            let max = logits.iter().map(|&(_, l)| l).fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = logits.iter().map(|&(_, l)| (l - max).exp()).sum();
            for &(j, l) in &logits {
                alpha[i][j] = (l - max).exp() / denom;
            }
            for o in 0..cfg.out_dim {
                out[i][o] += (0..n).map(|j| alpha[i][j] * z[j][o]).sum::<f64>() / cfg.heads as f64;
            }
        }
        alphas.push(alpha);
    }
    (out, alphas)
}

/// Average precision by sweeping every distinct score as a threshold and
/// recounting from scratch at each one.
pub fn brute_force_ap(scores: &[f64], positives: &[bool]) -> f64 {
    let total_pos = positives.iter().filter(|&&p| p).count();
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_tp = 0usize;
    for t in thresholds {
        let above: Vec<bool> = scores
            .iter()
            .zip(positives)
            .filter(|(&s, _)| s >= t)
            .map(|(_, &p)| p)
            .collect();
        let tp = above.iter().filter(|&&p| p).count();
        if tp > prev_tp {
            ap += (tp - prev_tp) as f64 / total_pos as f64 * (tp as f64 / above.len() as f64);
        }
        prev_tp = tp;
    }
    ap
}

/// Writes a line to the real stdout so it shows even when output is captured.
pub fn report(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "\n{line}");
}
