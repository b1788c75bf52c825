//! Learnable architectures and the ordinal label codec.

mod checkpoint;
mod cl_head;
mod gat;
mod knn;
mod mlp;
mod network;
mod ordinal;
mod params;

pub use checkpoint::{Checkpoint, CheckpointMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use cl_head::{ClHead, ClHeadConfig, CL_PREFIX, DEFAULT_PROJECTION_DIM};
pub use gat::{gat_forward, gat_layer, GatConfig, GatOutput, Neighborhoods, SELF_LOOP_WEIGHT};
pub use knn::{knn_classify, knn_predict, KnnConfig, KnnOutput, TieBreak, DEFAULT_K};
pub use mlp::{dense, dense_init, mlp, mlp_init};
pub use network::{
    sigmoid_rows, Architecture, Model, DEFAULT_HEADS, DEFAULT_HIDDEN, MLP_A_HIDDEN, MLP_PREFIX, MLP_QA_HIDDEN,
    REDUCER_PREFIX,
};
pub use ordinal::{class_probs, decode_ordinal, decode_with, encode_ordinal, target_matrix, DecodeRule, OrdinalTarget};
pub use params::{glorot_uniform, Bound, ParamStore};
