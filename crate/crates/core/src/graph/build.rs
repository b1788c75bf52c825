use rayon::prelude::*;

use super::{GraphConfig, SimilarityGraph};
use crate::corpus::EmbeddingMatrix;
use crate::{Error, Result};

/// `a·b / (‖a‖‖b‖)` evaluated in `f64`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape("cosine_similarity", format!("{} vs {}", a.len(), b.len())));
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 {
        return Err(Error::ZeroNorm { row: 0 });
    }
    if nb == 0.0 {
        return Err(Error::ZeroNorm { row: 1 });
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Embedding rows scaled to unit length once, in `f64`.
///
/// Graph construction and extension both compare rows through
/// [`UnitRows::similarity`], so an edge weight depends only on the two rows
/// involved and never on blocking or on which side is new.
#[derive(Clone, Debug)]
pub struct UnitRows {
    dim: usize,
    values: Vec<f64>,
}

impl UnitRows {
    pub fn new(embeddings: &EmbeddingMatrix) -> Result<Self> {
        let dim = embeddings.dim();
        let mut values = Vec::with_capacity(embeddings.rows() * dim);
        for r in 0..embeddings.rows() {
            let row = embeddings.row(r);
            let norm = row.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::ZeroNorm { row: r });
            }
            values.extend(row.iter().map(|&v| v as f64 / norm));
        }
        Ok(Self { dim, values })
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.dim.max(1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn similarity(&self, i: usize, other: &UnitRows, j: usize) -> f64 {
        let (a, b) = (self.row(i), other.row(j));
        let mut acc = 0.0f64;
        for k in 0..a.len() {
            acc += a[k] * b[k];
        }
        acc.clamp(-1.0, 1.0)
    }
}

/// Neighbors of each row in `rows` among the columns of `cols`, tiled in
/// `block`-sized column blocks. `skip` maps a (row, column) pair to true when
/// it is the same node.
pub(crate) fn threshold_rows(
    rows: &UnitRows,
    row_range: std::ops::Range<usize>,
    cols: &UnitRows,
    col_offset: u32,
    tau: f32,
    block: usize,
    skip: impl Fn(usize, usize) -> bool,
) -> Vec<Vec<(u32, f32)>> {
    let tau = tau as f64;
    let mut out: Vec<Vec<(u32, f32)>> = vec![Vec::new(); row_range.len()];
    let ncols = cols.rows();
    let mut c0 = 0;
    while c0 < ncols {
        let c1 = (c0 + block).min(ncols);
        for (slot, u) in out.iter_mut().zip(row_range.clone()) {
            for v in c0..c1 {
                if skip(u, v) {
                    continue;
                }
                let s = rows.similarity(u, cols, v);
                if s > tau {
                    slot.push((v as u32 + col_offset, s as f32));
                }
            }
        }
        c0 = c1;
    }
    out
}

/// Builds the similarity graph with an exact blocked all-pairs scan.
pub fn build_graph(embeddings: &EmbeddingMatrix, config: &GraphConfig) -> Result<SimilarityGraph> {
    config.validate()?;
    let n = embeddings.rows();
    if n == 0 {
        return Err(Error::Data("cannot build a graph over zero embeddings".into()));
    }
    if n > u32::MAX as usize {
        return Err(Error::Data(format!("{n} nodes exceed the u32 id space")));
    }
    let unit = UnitRows::new(embeddings)?;
    let block = config.block_size;
    let starts: Vec<usize> = (0..n).step_by(block).collect();
    let rows: Vec<Vec<(u32, f32)>> = starts
        .par_iter()
        .map(|&r0| {
            let r1 = (r0 + block).min(n);
            threshold_rows(&unit, r0..r1, &unit, 0, config.tau, block, |u, v| u == v)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(SimilarityGraph::from_rows(config.tau, rows))
}
