use crate::numerics::{Scalar, Tape, Tensor, Var};
use crate::Result;

/// Mean binary cross entropy of cumulative targets over `nodes`.
pub fn bce_ordinal_loss<T: Scalar>(
    tape: &mut Tape<T>,
    logits: Var,
    targets: &Tensor<T>,
    nodes: &[usize],
) -> Result<Var> {
    tape.bce_with_logits(logits, targets, nodes)
}

/// Supervised contrastive loss over unit-norm projections.
pub fn supcon_loss<T: Scalar>(tape: &mut Tape<T>, z: Var, labels: &[u32], temperature: f64) -> Result<Var> {
    tape.supcon(z, labels, temperature)
}
