//! Affine layers and ReLU stacks.

use rand_chacha::ChaCha8Rng;

use super::params::{glorot_uniform, Bound, ParamStore};
use crate::numerics::{Scalar, Tape, Tensor, Var};
use crate::Result;

pub fn weight_name(prefix: &str) -> String {
    format!("{prefix}.weight")
}

pub fn bias_name(prefix: &str) -> String {
    format!("{prefix}.bias")
}

fn layer_prefix(prefix: &str, k: usize) -> String {
    format!("{prefix}.layer{k}")
}

/// Adds `prefix.weight` (`in_dim × out_dim`, Glorot) and a zero `prefix.bias`.
pub fn dense_init(store: &mut ParamStore, prefix: &str, in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) {
    store.insert(
        weight_name(prefix),
        glorot_uniform(&[in_dim, out_dim], in_dim, out_dim, rng),
    );
    store.insert(bias_name(prefix), Tensor::zeros([out_dim]));
}

/// `x · W + b`.
pub fn dense<T: Scalar>(tape: &mut Tape<T>, bound: &Bound, prefix: &str, x: Var) -> Result<Var> {
    let h = tape.matmul(x, bound.var(&weight_name(prefix))?)?;
    tape.add_row(h, bound.var(&bias_name(prefix))?)
}

/// Layers `prefix.layer0 … prefix.layer{dims.len()-2}` mapping `dims[k] → dims[k+1]`.
pub fn mlp_init(store: &mut ParamStore, prefix: &str, dims: &[usize], rng: &mut ChaCha8Rng) {
    for (k, w) in dims.windows(2).enumerate() {
        dense_init(store, &layer_prefix(prefix, k), w[0], w[1], rng);
    }
}

/// Dense layers with ReLU between them and no activation after the last.
pub fn mlp<T: Scalar>(tape: &mut Tape<T>, bound: &Bound, prefix: &str, layers: usize, x: Var) -> Result<Var> {
    let mut h = x;
    for k in 0..layers {
        h = dense(tape, bound, &layer_prefix(prefix, k), h)?;
        if k + 1 < layers {
            h = tape.relu(h)?;
        }
    }
    Ok(h)
}
