//! Dense tensors and a recorded tape for reverse-mode gradients.
//!
//! Training runs in `f32`; [`grad_check`] replays the same ops in `f64`
//! against central differences. Every op validates its output and
//! reports NaN/Inf as [`Error::NonFinite`](crate::Error::NonFinite).

mod gradcheck;
mod linalg;
mod scalar;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, grad_check_many, DEFAULT_GRAD_CHECK_EPS};
pub use linalg::{matmul_into, matmul_nt_into, matmul_tn_into};
pub use scalar::Scalar;
pub use tape::{Activation, Tape, Var, DEFAULT_LEAKY_SLOPE};
pub use tensor::Tensor;

/// Softmax over contiguous segments; `offsets` delimits each segment.
///
/// Segment `g` covers `logits[offsets[g]..offsets[g + 1]]`. Every segment
/// must be nonempty.
pub fn neighborhood_softmax<T: Scalar>(logits: &[T], offsets: &[usize]) -> crate::Result<Vec<T>> {
    let mut out = vec![T::zero(); logits.len()];
    tape::segment_softmax_into(logits, offsets, &mut out)?;
    Ok(out)
}
