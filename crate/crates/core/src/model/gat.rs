//! Single graph attention layer with edge-weight-aware attention.
//!
//! For head `h`, node `i` and admissible source `j` (including the implicit
//! self-loop with weight 1):
//!
//! ```text
//! z_j   = W_h x_j
//! l_ij  = leaky_relu(a_src·z_j + a_dst·z_i + a_edge·w_ij)
//! α_ij  = softmax_j(l_ij)
//! h_i   = Σ_j α_ij z_j
//! ```
//!
//! Head outputs are averaged.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{glorot_uniform, Bound, ParamStore};
use crate::graph::SimilarityGraph;
use crate::numerics::{Scalar, Tape, Tensor, Var, DEFAULT_LEAKY_SLOPE};
use crate::training::PhaseMask;
use crate::{Error, Result};

pub const SELF_LOOP_WEIGHT: f32 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatConfig {
    pub in_dim: usize,
    pub out_dim: usize,
    pub heads: usize,
    pub slope: f64,
}

impl GatConfig {
    pub fn new(in_dim: usize, out_dim: usize, heads: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            heads,
            slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn weight_name(h: usize) -> String {
        format!("gat.head{h}.weight")
    }
    pub fn att_src_name(h: usize) -> String {
        format!("gat.head{h}.att_src")
    }
    pub fn att_dst_name(h: usize) -> String {
        format!("gat.head{h}.att_dst")
    }
    pub fn att_edge_name(h: usize) -> String {
        format!("gat.head{h}.att_edge")
    }

    /// Glorot-uniform projections and attention vectors; edge coefficients start at 0.
    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        for h in 0..self.heads {
            store.insert(
                Self::weight_name(h),
                glorot_uniform(&[self.in_dim, self.out_dim], self.in_dim, self.out_dim, rng),
            );
            store.insert(
                Self::att_src_name(h),
                glorot_uniform(&[self.out_dim, 1], self.out_dim, 1, rng),
            );
            store.insert(
                Self::att_dst_name(h),
                glorot_uniform(&[self.out_dim, 1], self.out_dim, 1, rng),
            );
            store.insert(Self::att_edge_name(h), Tensor::zeros([1]));
        }
    }
}

/// Per-destination incoming edge lists, self-loop first, then admissible
/// neighbors in ascending id order.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighborhoods {
    offsets: Arc<[usize]>,
    src: Arc<[u32]>,
    dst: Arc<[u32]>,
    weight: Vec<f32>,
}

impl Neighborhoods {
    pub fn new(graph: &SimilarityGraph, mask: &PhaseMask) -> Result<Self> {
        let n = graph.num_nodes();
        if mask.num_nodes() != n {
            return Err(Error::Data(format!(
                "mask covers {} nodes but the graph has {n}",
                mask.num_nodes()
            )));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut src = Vec::with_capacity(n + graph.num_directed_edges());
        let mut dst = Vec::with_capacity(src.capacity());
        let mut weight = Vec::with_capacity(src.capacity());
        offsets.push(0);
        for i in 0..n {
            src.push(i as u32);
            dst.push(i as u32);
            weight.push(SELF_LOOP_WEIGHT);
            if mask.is_target(i) {
                for (j, w) in graph.neighbors(i) {
                    if mask.admissible(i, j as usize) {
                        src.push(j);
                        dst.push(i as u32);
                        weight.push(w);
                    }
                }
            }
            offsets.push(src.len());
        }
        Ok(Self {
            offsets: offsets.into(),
            src: src.into(),
            dst: dst.into(),
            weight,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }

    /// Sources feeding node `i`, self first.
    pub fn sources(&self, i: usize) -> &[u32] {
        &self.src[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn weights(&self, i: usize) -> &[f32] {
        &self.weight[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }
}

pub struct GatOutput {
    /// `n × out_dim` pre-sigmoid logits.
    pub logits: Var,
    /// Per-head attention coefficients, one per edge of the neighborhoods.
    pub attention: Vec<Var>,
}

/// Records the attention layer on `tape`.
pub fn gat_layer<T: Scalar>(
    tape: &mut Tape<T>,
    bound: &Bound,
    config: &GatConfig,
    features: Var,
    nb: &Neighborhoods,
) -> Result<GatOutput> {
    let x = tape.value(features);
    if x.rows() != nb.num_nodes() || x.cols() != config.in_dim {
        return Err(Error::shape(
            "gat_forward",
            format!(
                "features {:?} for {} nodes of width {}",
                x.shape(),
                nb.num_nodes(),
                config.in_dim
            ),
        ));
    }
    let e = nb.num_edges();
    let w = tape.constant(Tensor::from_parts(
        vec![e, 1],
        nb.weight.iter().map(|&v| T::of(v as f64)).collect(),
    ));
    let mut sum: Option<Var> = None;
    let mut attention = Vec::with_capacity(config.heads);
    for h in 0..config.heads {
        let z = tape.matmul(features, bound.var(&GatConfig::weight_name(h))?)?;
        let s_src = tape.matmul(z, bound.var(&GatConfig::att_src_name(h))?)?;
        let s_dst = tape.matmul(z, bound.var(&GatConfig::att_dst_name(h))?)?;
        let e_src = tape.gather_rows(s_src, nb.src.clone())?;
        let e_dst = tape.gather_rows(s_dst, nb.dst.clone())?;
        let e_w = tape.scale_by(w, bound.var(&GatConfig::att_edge_name(h))?)?;
        let l = tape.add(e_src, e_dst)?;
        let l = tape.add(l, e_w)?;
        let l = tape.leaky_relu(l, config.slope)?;
        let alpha = tape.segment_softmax(l, nb.offsets.clone())?;
        let out = tape.segment_aggregate(alpha, z, nb.src.clone(), nb.offsets.clone())?;
        attention.push(alpha);
        sum = Some(match sum {
            None => out,
            Some(acc) => tape.add(acc, out)?,
        });
    }
    let sum = sum.ok_or_else(|| Error::InvalidArgument("attention layer needs at least one head".into()))?;
    let logits = if config.heads == 1 {
        sum
    } else {
        tape.scale(sum, 1.0 / config.heads as f64)?
    };
    Ok(GatOutput { logits, attention })
}

/// Logits of the attention layer for `features` under `mask`, without gradients.
pub fn gat_forward(
    params: &ParamStore,
    config: &GatConfig,
    graph: &SimilarityGraph,
    features: &Tensor<f32>,
    mask: &PhaseMask,
) -> Result<Tensor<f32>> {
    let nb = Neighborhoods::new(graph, mask)?;
    let mut tape = Tape::<f32>::new();
    let bound = params.bind_frozen(&mut tape);
    let x = tape.constant(features.clone());
    let out = gat_layer(&mut tape, &bound, config, x, &nb)?;
    Ok(tape.value(out.logits).clone())
}
