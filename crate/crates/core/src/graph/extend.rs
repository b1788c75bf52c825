use rayon::prelude::*;

use super::build::{threshold_rows, UnitRows};
use super::{GraphConfig, SimilarityGraph};
use crate::corpus::EmbeddingMatrix;
use crate::{Error, Result};

/// A base graph plus appended nodes.
///
/// New node `k` gets id `base.num_nodes() + k`. `new_edges` holds every
/// undirected edge touching a new node, as `(new id, other id, weight)`
/// with `other` either a base node or a smaller new id.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphExtension {
    pub base: SimilarityGraph,
    pub new_nodes: usize,
    pub new_edges: Vec<(u32, u32, f32)>,
}

impl GraphExtension {
    pub fn total_nodes(&self) -> usize {
        self.base.num_nodes() + self.new_nodes
    }

    /// The combined graph over base and new nodes.
    pub fn merged(&self) -> SimilarityGraph {
        let n = self.base.num_nodes();
        let mut rows: Vec<Vec<(u32, f32)>> = (0..n).map(|u| self.base.neighbors(u).collect()).collect();
        rows.resize(self.total_nodes(), Vec::new());
        for &(a, b, w) in &self.new_edges {
            rows[a as usize].push((b, w));
            rows[b as usize].push((a, w));
        }
        for row in &mut rows {
            row.sort_by_key(|&(v, _)| v);
        }
        SimilarityGraph::from_rows(self.base.tau(), rows)
    }
}

/// Appends `new_embeddings` to `base`, computing new–new and new–base edges
/// under the same strict threshold. Base edges are left untouched.
pub fn extend_graph(
    base: &SimilarityGraph,
    base_embeddings: &EmbeddingMatrix,
    new_embeddings: &EmbeddingMatrix,
    config: &GraphConfig,
) -> Result<GraphExtension> {
    config.validate()?;
    if base_embeddings.dim() != new_embeddings.dim() {
        return Err(Error::Data(format!(
            "dimension mismatch: base {} vs new {}",
            base_embeddings.dim(),
            new_embeddings.dim()
        )));
    }
    if base_embeddings.rows() != base.num_nodes() {
        return Err(Error::Data(format!(
            "base graph has {} nodes but {} embeddings",
            base.num_nodes(),
            base_embeddings.rows()
        )));
    }
    if config.tau.to_bits() != base.tau().to_bits() {
        return Err(Error::InvalidArgument(format!(
            "tau {} differs from the base graph's {}",
            config.tau,
            base.tau()
        )));
    }
    let n = base.num_nodes();
    let m = new_embeddings.rows();
    if n + m > u32::MAX as usize {
        return Err(Error::Data(format!("{} nodes exceed the u32 id space", n + m)));
    }
    let base_unit = UnitRows::new(base_embeddings)?;
    let new_unit = UnitRows::new(new_embeddings)?;
    let block = config.block_size;
    let starts: Vec<usize> = (0..m).step_by(block).collect();
    let per_block: Vec<Vec<(u32, f32, u32)>> = starts
        .par_iter()
        .map(|&r0| {
            let r1 = (r0 + block).min(m);
            let to_base = threshold_rows(&new_unit, r0..r1, &base_unit, 0, config.tau, block, |_, _| false);
            // only earlier new nodes, so each new–new pair appears once
            let to_new = threshold_rows(&new_unit, r0..r1, &new_unit, n as u32, config.tau, block, |u, v| v >= u);
            let mut edges = Vec::new();
            for (k, (tb, tn)) in to_base.into_iter().zip(to_new).enumerate() {
                let id = (n + r0 + k) as u32;
                edges.extend(tb.into_iter().chain(tn).map(|(v, w)| (id, w, v)));
            }
            edges
        })
        .collect();
    let new_edges = per_block.into_iter().flatten().map(|(a, w, b)| (a, b, w)).collect();
    Ok(GraphExtension {
        base: base.clone(),
        new_nodes: m,
        new_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    fn emb(rows: &[Vec<f32>]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(rows).unwrap()
    }

    fn base() -> (EmbeddingMatrix, SimilarityGraph) {
        let e = emb(&[
            vec![1., 0., 0., 0.],
            vec![0.9, 0.1, 0., 0.],
            vec![0., 1., 0., 0.],
            vec![0., 0., 1., 0.2],
        ]);
        let g = build_graph(&e, &GraphConfig::default()).unwrap();
        (e, g)
    }

    #[test]
    fn duplicate_of_base_node() {
        let (e, g) = base();
        let new = emb(&[vec![0., 0., 1., 0.2]]);
        let ext = extend_graph(&g, &e, &new, &GraphConfig::default()).unwrap();
        assert_eq!(ext.new_edges, vec![(4, 3, 1.0)]);
        let merged = ext.merged();
        merged.check_invariants().unwrap();
        assert_eq!(merged.weight(3, 4), Some(1.0));
        // base edges untouched
        assert_eq!(merged.weight(0, 1), g.weight(0, 1));
    }

    #[test]
    fn orthogonal_new_node_is_isolated() {
        let (e, g) = base();
        let new = emb(&[vec![0., 0., 0., 1.]]);
        let ext = extend_graph(&g, &e, &new, &GraphConfig::new(0.85, 3).unwrap()).unwrap();
        assert!(ext.new_edges.is_empty());
        assert_eq!(ext.merged().degree(4), 0);
    }

    #[test]
    fn rejects_mismatches() {
        let (e, g) = base();
        let bad_dim = emb(&[vec![1., 0.]]);
        assert!(extend_graph(&g, &e, &bad_dim, &GraphConfig::default()).is_err());
        let ok = emb(&[vec![1., 0., 0., 0.]]);
        assert!(extend_graph(&g, &e, &ok, &GraphConfig::new(0.8, 8).unwrap()).is_err());
    }
}
