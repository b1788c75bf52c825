//! Contrastive projection head: `linear → ReLU → linear`, rows L2-normalized.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{mlp, mlp_init};
use super::params::{Bound, ParamStore};
use crate::numerics::{Scalar, Tape, Tensor, Var};
use crate::{Error, Result};

pub const CL_PREFIX: &str = "cl";
pub const DEFAULT_PROJECTION_DIM: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClHeadConfig {
    pub in_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
}

impl ClHeadConfig {
    /// `in_dim → in_dim → 128`.
    pub fn new(in_dim: usize) -> Self {
        Self {
            in_dim,
            hidden: in_dim,
            out_dim: DEFAULT_PROJECTION_DIM,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClHead {
    pub config: ClHeadConfig,
    pub params: ParamStore,
}

impl ClHead {
    pub fn init(config: ClHeadConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        mlp_init(
            &mut params,
            CL_PREFIX,
            &[config.in_dim, config.hidden, config.out_dim],
            &mut rng,
        );
        Self { config, params }
    }

    /// Projections before normalization.
    pub fn raw<T: Scalar>(tape: &mut Tape<T>, bound: &Bound, x: Var) -> Result<Var> {
        mlp(tape, bound, CL_PREFIX, 2, x)
    }

    /// Unit-norm projections.
    pub fn forward<T: Scalar>(tape: &mut Tape<T>, bound: &Bound, x: Var) -> Result<Var> {
        let h = Self::raw(tape, bound, x)?;
        tape.normalize_rows(h)
    }

    pub fn project(&self, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        if x.cols() != self.config.in_dim {
            return Err(Error::shape(
                "cl_head_forward",
                format!("input width {} but head expects {}", x.cols(), self.config.in_dim),
            ));
        }
        let mut tape = Tape::<f32>::new();
        let bound = self.params.bind_frozen(&mut tape);
        let xv = tape.constant(x.clone());
        let out = Self::forward(&mut tape, &bound, xv)?;
        Ok(tape.value(out).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn head() -> ClHead {
        ClHead::init(
            ClHeadConfig {
                in_dim: 12,
                hidden: 12,
                out_dim: 5,
            },
            9,
        )
    }

    #[test]
    fn outputs_are_unit_rows() {
        let h = head();
        let x = Tensor::matrix(6, 12, (0..72).map(|i| ((i * 13 % 17) as f32 - 8.0) / 4.0).collect()).unwrap();
        let p = h.project(&x).unwrap();
        for r in 0..6 {
            let n: f32 = p.row(r).iter().map(|v| v * v).sum::<f32>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_input_zero_bias_is_zero_norm_error() {
        let h = head();
        let err = h.project(&Tensor::zeros([2, 12])).unwrap_err();
        assert!(matches!(err, Error::ZeroNorm { .. }));
    }

    #[test]
    fn width_checked() {
        assert!(head().project(&Tensor::zeros([2, 7])).is_err());
        assert_eq!(ClHeadConfig::new(768).out_dim, 128);
    }
}
