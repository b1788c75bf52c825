//! Hallucination detection on semantic similarity graphs.
//!
//! Sentence embeddings become nodes of a cosine-threshold graph; a graph
//! attention layer over reduced features predicts an ordinal degree of
//! truthfulness, trained with phase-dependent neighborhood masking so no
//! information flows from held-out nodes. New statements are scored by
//! appending them to the graph and running one forward pass.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod eval;
pub mod graph;
pub mod model;
pub mod numerics;
pub mod training;

mod error;
mod fsio;

pub use error::{Error, ErrorClass, Result};
pub use fsio::write_atomic;
