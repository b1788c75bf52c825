//! Metrics, phase evaluation and label recovery for appended statements.

mod metrics;
mod report;

pub use metrics::{
    auc_pr, binary_auc_pr, confusion_matrix, macro_auc_pr, macro_precision, macro_precision_from, macro_recall,
    macro_recall_from, per_class_auc_pr, per_class_precision, per_class_recall,
};
pub use report::{ClassReport, EvalReport, ReportMetadata, AUC_PR_METHOD, PRECISION_CONVENTION, RECALL_CONVENTION};

use crate::corpus::{Corpus, EmbeddingMatrix, Split};
use crate::graph::{extend_graph, GraphConfig, SimilarityGraph, DEFAULT_BLOCK_SIZE};
use crate::model::{class_probs, decode_with, sigmoid_rows, Checkpoint, DecodeRule, Model, Neighborhoods};
use crate::numerics::Tensor;
use crate::training::{phase_neighborhoods, Phase};
use crate::{Error, Result};

/// Model outputs for a subset of nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub nodes: Vec<usize>,
    /// Pre-sigmoid outputs, one row per node.
    pub logits: Vec<Vec<f32>>,
    /// Sigmoid of the logits.
    pub cumulative: Vec<Vec<f64>>,
    pub class_probs: Vec<Vec<f64>>,
    pub predictions: Vec<u32>,
}

pub fn score_nodes(
    model: &Model,
    features: &Tensor<f32>,
    nb: Option<&Neighborhoods>,
    nodes: &[usize],
    rule: DecodeRule,
) -> Result<Scored> {
    let logits = model.logits(features, nb)?.select_rows(nodes);
    let cumulative = sigmoid_rows(&logits);
    Ok(Scored {
        nodes: nodes.to_vec(),
        logits: (0..logits.rows()).map(|r| logits.row(r).to_vec()).collect(),
        class_probs: cumulative.iter().map(|p| class_probs(p)).collect(),
        predictions: cumulative.iter().map(|p| decode_with(p, rule)).collect(),
        cumulative,
    })
}

/// Scores the nodes of `phase` under that phase's neighborhoods.
pub fn predict_phase(
    checkpoint: &Checkpoint,
    corpus: &Corpus,
    graph: Option<&SimilarityGraph>,
    phase: Phase,
) -> Result<Scored> {
    let model = &checkpoint.model;
    let nodes = corpus.indices_of(phase.split());
    if nodes.is_empty() {
        return Err(Error::Data(format!("the {phase} split is empty")));
    }
    if model.num_classes() != corpus.num_classes() {
        return Err(Error::Data(format!(
            "checkpoint predicts {} classes, corpus has {}",
            model.num_classes(),
            corpus.num_classes()
        )));
    }
    let nb = match (model.arch.uses_graph(), graph) {
        (false, _) => None,
        (true, None) => return Err(Error::InvalidArgument("attention model needs a graph".into())),
        (true, Some(g)) => {
            if g.num_nodes() != corpus.len() {
                return Err(Error::Data(format!(
                    "graph has {} nodes, corpus has {}",
                    g.num_nodes(),
                    corpus.len()
                )));
            }
            Some(Neighborhoods::new(
                g,
                &phase_neighborhoods(g, &corpus.splits(), phase)?,
            )?)
        }
    };
    let features = model.features(corpus.embeddings())?;
    score_nodes(model, &features, nb.as_ref(), &nodes, checkpoint.meta.decode_rule)
}

/// Metrics over the nodes of `phase`.
pub fn evaluate(
    checkpoint: &Checkpoint,
    corpus: &Corpus,
    graph: Option<&SimilarityGraph>,
    phase: Phase,
) -> Result<EvalReport> {
    let scored = predict_phase(checkpoint, corpus, graph, phase)?;
    let labels = corpus.labels();
    let truth = scored
        .nodes
        .iter()
        .map(|&i| labels[i].ok_or_else(|| Error::Data(format!("node {i} has no label"))))
        .collect::<Result<Vec<u32>>>()?;
    EvalReport::from_predictions(
        phase,
        checkpoint.model.arch.name(),
        &scored.predictions,
        &truth,
        &scored.class_probs,
        corpus.num_classes(),
    )
}

/// Predictions for statements appended to a labeled graph.
///
/// The new rows join the graph under the base threshold and are scored as
/// test nodes, so every base node is an admissible neighbor.
pub fn recover_labels(
    checkpoint: &Checkpoint,
    base: &Corpus,
    graph: &SimilarityGraph,
    new_embeddings: &EmbeddingMatrix,
) -> Result<Scored> {
    let model = &checkpoint.model;
    if new_embeddings.dim() != base.embeddings().dim() {
        return Err(Error::shape(
            "recover_labels",
            format!(
                "new embeddings have dim {}, base corpus {}",
                new_embeddings.dim(),
                base.embeddings().dim()
            ),
        ));
    }
    let n = base.len();
    let m = new_embeddings.rows();
    let all = base.embeddings().stack(new_embeddings)?;
    let features = model.features(&all)?;
    let nodes: Vec<usize> = (n..n + m).collect();
    if !model.arch.uses_graph() {
        return score_nodes(model, &features, None, &nodes, checkpoint.meta.decode_rule);
    }
    let config = GraphConfig::new(graph.tau(), DEFAULT_BLOCK_SIZE)?;
    let merged = extend_graph(graph, base.embeddings(), new_embeddings, &config)?.merged();
    let mut splits = base.splits();
    splits.extend(std::iter::repeat_n(Split::Test, m));
    let nb = Neighborhoods::new(&merged, &phase_neighborhoods(&merged, &splits, Phase::Test)?)?;
    score_nodes(model, &features, Some(&nb), &nodes, checkpoint.meta.decode_rule)
}
