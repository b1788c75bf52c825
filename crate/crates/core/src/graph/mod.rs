//! Cosine-threshold similarity graphs over sentence embeddings.
//!
//! Two statements are joined when the cosine similarity of their embeddings
//! is strictly greater than `tau`; the similarity is kept as the edge weight.

mod build;
mod extend;
mod io;
mod stats;

pub use build::{build_graph, cosine_similarity, UnitRows};
pub use extend::{extend_graph, GraphExtension};
pub use io::{encode_graph, read_graph, write_graph, GRAPH_MAGIC, GRAPH_VERSION};
pub use stats::{degree_stats, DegreeStats, HistogramBin};

use crate::{Error, Result};

pub const DEFAULT_TAU: f32 = 0.85;
pub const DEFAULT_BLOCK_SIZE: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphConfig {
    pub tau: f32,
    pub block_size: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }
}

impl GraphConfig {
    pub fn new(tau: f32, block_size: usize) -> Result<Self> {
        let c = Self { tau, block_size };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > -1.0 && self.tau < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must lie strictly inside (-1, 1), got {}",
                self.tau
            )));
        }
        if self.block_size == 0 {
            return Err(Error::InvalidArgument("block size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Undirected weighted graph in CSR form; each edge is stored in both
/// directions and every row's targets are sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityGraph {
    tau: f32,
    offsets: Vec<u64>,
    targets: Vec<u32>,
    weights: Vec<f32>,
}

impl SimilarityGraph {
    /// Assembles a graph from raw CSR arrays and verifies every invariant.
    pub fn from_csr(tau: f32, offsets: Vec<u64>, targets: Vec<u32>, weights: Vec<f32>) -> Result<Self> {
        let g = Self {
            tau,
            offsets,
            targets,
            weights,
        };
        g.check_invariants()?;
        Ok(g)
    }

    pub(crate) fn from_rows(tau: f32, rows: Vec<Vec<(u32, f32)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0u64);
        let total = rows.iter().map(Vec::len).sum();
        let mut targets = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for row in rows {
            for (v, w) in row {
                targets.push(v);
                weights.push(w);
            }
            offsets.push(targets.len() as u64);
        }
        Self {
            tau,
            offsets,
            targets,
            weights,
        }
    }

    pub fn empty(n: usize, tau: f32) -> Self {
        Self::from_rows(tau, vec![Vec::new(); n])
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Directed edge count (twice the undirected count).
    pub fn num_directed_edges(&self) -> usize {
        self.targets.len()
    }

    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn tau(&self) -> f32 {
        self.tau
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn targets(&self) -> &[u32] {
        &self.targets
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    fn span(&self, u: usize) -> std::ops::Range<usize> {
        self.offsets[u] as usize..self.offsets[u + 1] as usize
    }

    pub fn degree(&self, u: usize) -> usize {
        self.span(u).len()
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (u32, f32)> + '_ {
        let span = self.span(u);
        self.targets[span.clone()]
            .iter()
            .copied()
            .zip(self.weights[span].iter().copied())
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f32> {
        let span = self.span(u);
        let row = &self.targets[span.clone()];
        row.binary_search(&(v as u32))
            .ok()
            .map(|k| self.weights[span.start + k])
    }

    /// Full scan of the structural invariants: monotone offsets, in-range
    /// sorted targets, no self edges, weights above `tau`, symmetry.
    pub fn check_invariants(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Data(format!("invalid graph: {msg}")));
        if self.offsets.first() != Some(&0) {
            return bad("offsets must start at 0".into());
        }
        if self.offsets.last().copied() != Some(self.targets.len() as u64) || self.targets.len() != self.weights.len() {
            return bad("offsets, targets and weights disagree in length".into());
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1]) {
            return bad("offsets decrease".into());
        }
        let n = self.num_nodes();
        let tau = self.tau as f64;
        for u in 0..n {
            let row = &self.targets[self.span(u)];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("row {u} targets not strictly ascending"));
            }
            for (v, w) in self.neighbors(u) {
                let v = v as usize;
                if v >= n {
                    return bad(format!("target {v} out of range in row {u}"));
                }
                if v == u {
                    return bad(format!("self edge at {u}"));
                }
                if !(w as f64 > tau) || !w.is_finite() {
                    return bad(format!("edge ({u},{v}) weight {w} not above tau {tau}"));
                }
                if self.weight(v, u).map(f32::to_bits) != Some(w.to_bits()) {
                    return bad(format!("edge ({u},{v}) has no identical reverse edge"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_range() {
        assert!(GraphConfig::new(0.85, 64).is_ok());
        assert!(GraphConfig::new(1.5, 64).is_err());
        assert!(GraphConfig::new(-1.0, 64).is_err());
        assert!(GraphConfig::new(0.5, 0).is_err());
    }

    #[test]
    fn invariant_scan_catches_asymmetry() {
        let g = SimilarityGraph::from_csr(0.5, vec![0, 1, 1], vec![1], vec![0.9]);
        assert!(g.is_err());
        let g = SimilarityGraph::from_csr(0.5, vec![0, 1, 2], vec![1, 0], vec![0.9, 0.9]).unwrap();
        assert_eq!(g.weight(1, 0), Some(0.9));
        assert_eq!(g.num_edges(), 1);
        let low = SimilarityGraph::from_csr(0.95, vec![0, 1, 2], vec![1, 0], vec![0.9, 0.9]);
        assert!(low.is_err());
    }
}
