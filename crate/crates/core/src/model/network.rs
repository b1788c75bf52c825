use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cl_head::ClHead;
use super::gat::{gat_layer, GatConfig, Neighborhoods};
use super::mlp::{dense, dense_init, mlp, mlp_init};
use super::params::{Bound, ParamStore};
use crate::corpus::EmbeddingMatrix;
use crate::numerics::{Scalar, Tape, Tensor, Var, DEFAULT_LEAKY_SLOPE};
use crate::{Error, Result};

pub const REDUCER_PREFIX: &str = "reducer";
pub const MLP_PREFIX: &str = "mlp";
pub const DEFAULT_HIDDEN: usize = 32;
pub const DEFAULT_HEADS: usize = 2;
pub const MLP_A_HIDDEN: [usize; 2] = [64, 32];
pub const MLP_QA_HIDDEN: [usize; 2] = [512, 128];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Architecture {
    /// Affine reducer to `hidden`, then one attention layer to `depth`.
    Gat {
        input_dim: usize,
        hidden: usize,
        heads: usize,
        depth: usize,
        slope: f64,
    },
    MlpA {
        input_dim: usize,
        hidden: Vec<usize>,
        depth: usize,
    },
    /// Over concatenated query and answer embeddings.
    MlpQa {
        input_dim: usize,
        hidden: Vec<usize>,
        depth: usize,
    },
}

impl Architecture {
    pub fn gat(input_dim: usize, depth: usize) -> Self {
        Architecture::Gat {
            input_dim,
            hidden: DEFAULT_HIDDEN,
            heads: DEFAULT_HEADS,
            depth,
            slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn mlp_a(input_dim: usize, depth: usize) -> Self {
        Architecture::MlpA {
            input_dim,
            hidden: MLP_A_HIDDEN.to_vec(),
            depth,
        }
    }

    pub fn mlp_qa(input_dim: usize, depth: usize) -> Self {
        Architecture::MlpQa {
            input_dim,
            hidden: MLP_QA_HIDDEN.to_vec(),
            depth,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Architecture::Gat { input_dim, .. }
            | Architecture::MlpA { input_dim, .. }
            | Architecture::MlpQa { input_dim, .. } => *input_dim,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Architecture::Gat { depth, .. } | Architecture::MlpA { depth, .. } | Architecture::MlpQa { depth, .. } => {
                *depth
            }
        }
    }

    pub fn uses_graph(&self) -> bool {
        matches!(self, Architecture::Gat { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Architecture::Gat { .. } => "gat",
            Architecture::MlpA { .. } => "mlp-a",
            Architecture::MlpQa { .. } => "mlp-qa",
        }
    }

    pub fn gat_config(&self) -> Option<GatConfig> {
        match *self {
            Architecture::Gat {
                hidden,
                heads,
                depth,
                slope,
                ..
            } => Some(GatConfig {
                in_dim: hidden,
                out_dim: depth,
                heads,
                slope,
            }),
            _ => None,
        }
    }

    fn mlp_dims(&self) -> Option<Vec<usize>> {
        match self {
            Architecture::MlpA {
                input_dim,
                hidden,
                depth,
            }
            | Architecture::MlpQa {
                input_dim,
                hidden,
                depth,
            } => {
                let mut dims = vec![*input_dim];
                dims.extend(hidden);
                dims.push(*depth);
                Some(dims)
            }
            Architecture::Gat { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim() == 0 || self.depth() == 0 {
            return Err(Error::InvalidArgument(format!("degenerate architecture {self:?}")));
        }
        match self {
            Architecture::Gat { hidden, heads, .. } if *hidden == 0 || *heads == 0 => Err(Error::InvalidArgument(
                "attention model needs hidden ≥ 1 and heads ≥ 1".into(),
            )),
            Architecture::MlpA { hidden, .. } | Architecture::MlpQa { hidden, .. } if hidden.contains(&0) => {
                Err(Error::InvalidArgument("zero-width hidden layer".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Trainable predictor plus an optional frozen projection head in front of it.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub arch: Architecture,
    pub params: ParamStore,
    pub cl_head: Option<ClHead>,
}

impl Model {
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        if let Some(cfg) = arch.gat_config() {
            dense_init(&mut params, REDUCER_PREFIX, arch.input_dim(), cfg.in_dim, &mut rng);
            cfg.init(&mut params, &mut rng);
        }
        if let Some(dims) = arch.mlp_dims() {
            mlp_init(&mut params, MLP_PREFIX, &dims, &mut rng);
        }
        Ok(Self {
            arch,
            params,
            cl_head: None,
        })
    }

    pub fn with_cl_head(mut self, head: ClHead) -> Result<Self> {
        if head.config.out_dim != self.arch.input_dim() {
            return Err(Error::shape(
                "with_cl_head",
                format!(
                    "projection width {} but model expects {}",
                    head.config.out_dim,
                    self.arch.input_dim()
                ),
            ));
        }
        self.cl_head = Some(head);
        Ok(self)
    }

    /// Width of the raw embeddings this model consumes.
    pub fn embedding_dim(&self) -> usize {
        match &self.cl_head {
            Some(h) => h.config.in_dim,
            None => self.arch.input_dim(),
        }
    }

    pub fn depth(&self) -> usize {
        self.arch.depth()
    }

    pub fn num_classes(&self) -> usize {
        self.arch.depth() + 1
    }

    /// Embeddings as model inputs, projected through the head when present.
    pub fn features(&self, embeddings: &EmbeddingMatrix) -> Result<Tensor<f32>> {
        if embeddings.dim() != self.embedding_dim() {
            return Err(Error::shape(
                "features",
                format!(
                    "embedding dim {} but model expects {}",
                    embeddings.dim(),
                    self.embedding_dim()
                ),
            ));
        }
        let x = Tensor::matrix(embeddings.rows(), embeddings.dim(), embeddings.values().to_vec())?;
        match &self.cl_head {
            Some(h) => h.project(&x),
            None => Ok(x),
        }
    }

    /// Records the forward pass; `nb` is required for the attention model.
    pub fn forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        bound: &Bound,
        x: Var,
        nb: Option<&Neighborhoods>,
    ) -> Result<Var> {
        match &self.arch {
            Architecture::Gat { .. } => {
                let nb = nb.ok_or_else(|| Error::InvalidArgument("attention model needs a graph".into()))?;
                let cfg = self.arch.gat_config().expect("attention config");
                let h = dense(tape, bound, REDUCER_PREFIX, x)?;
                Ok(gat_layer(tape, bound, &cfg, h, nb)?.logits)
            }
            Architecture::MlpA { hidden, .. } | Architecture::MlpQa { hidden, .. } => {
                mlp(tape, bound, MLP_PREFIX, hidden.len() + 1, x)
            }
        }
    }

    /// Pre-sigmoid logits without gradients.
    pub fn logits(&self, features: &Tensor<f32>, nb: Option<&Neighborhoods>) -> Result<Tensor<f32>> {
        let mut tape = Tape::<f32>::new();
        let bound = self.params.bind_frozen(&mut tape);
        let x = tape.constant(features.clone());
        let out = self.forward(&mut tape, &bound, x, nb)?;
        Ok(tape.value(out).clone())
    }
}

/// Row-wise sigmoid of a logits matrix, in `f64`.
pub fn sigmoid_rows(logits: &Tensor<f32>) -> Vec<Vec<f64>> {
    (0..logits.rows())
        .map(|r| {
            logits
                .row(r)
                .iter()
                .map(|&l| {
                    let l = l as f64;
                    if l >= 0.0 {
                        1.0 / (1.0 + (-l).exp())
                    } else {
                        let e = l.exp();
                        e / (1.0 + e)
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::cl_head::ClHeadConfig;

    #[test]
    fn parameter_layout() {
        let m = Model::init(Architecture::gat(768, 3), 0).unwrap();
        let names: Vec<_> = m
            .params
            .iter()
            .map(|(n, t)| (n.to_string(), t.shape().to_vec()))
            .collect();
        assert_eq!(names[0], ("reducer.weight".to_string(), vec![768, 32]));
        assert_eq!(names[2], ("gat.head0.weight".to_string(), vec![32, 3]));
        assert_eq!(m.params.len(), 2 + 2 * 4);
        let a = Model::init(Architecture::mlp_a(128, 3), 0).unwrap();
        assert_eq!(a.params.get("mlp.layer2.weight").unwrap().shape(), &[32, 3]);
        let qa = Model::init(Architecture::mlp_qa(1536, 3), 0).unwrap();
        assert_eq!(qa.params.get("mlp.layer0.weight").unwrap().shape(), &[1536, 512]);
    }

    #[test]
    fn init_is_seeded() {
        let a = Model::init(Architecture::gat(16, 3), 5).unwrap();
        let b = Model::init(Architecture::gat(16, 3), 5).unwrap();
        let c = Model::init(Architecture::gat(16, 3), 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn cl_head_width_must_match() {
        let m = Model::init(Architecture::gat(128, 3), 0).unwrap();
        let head = ClHead::init(ClHeadConfig::new(768), 0);
        let m = m.with_cl_head(head).unwrap();
        assert_eq!(m.embedding_dim(), 768);
        let m2 = Model::init(Architecture::gat(64, 3), 0).unwrap();
        assert!(m2.with_cl_head(ClHead::init(ClHeadConfig::new(768), 0)).is_err());
    }

    #[test]
    fn gat_needs_graph() {
        let m = Model::init(Architecture::gat(4, 2), 0).unwrap();
        let x = Tensor::matrix(1, 4, vec![1.0; 4]).unwrap();
        assert!(m.logits(&x, None).is_err());
    }

    #[test]
    fn sigmoid_is_stable() {
        let t = Tensor::matrix(1, 3, vec![-1000.0, 0.0, 1000.0]).unwrap();
        assert_eq!(sigmoid_rows(&t), vec![vec![0.0, 0.5, 1.0]]);
    }
}
