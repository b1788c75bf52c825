use std::fmt::Write as _;

use super::config::{OrdinalTrainConfig, TrainConfig};
use super::contrastive::train_cl;
use super::loss::bce_ordinal_loss;
use super::mask::{phase_neighborhoods, Phase};
use super::optim::{optimizer_step, AdamConfig, OptimizerState};
use crate::corpus::{Corpus, EmbeddingMatrix, Split};
use crate::eval::{binary_auc_pr, macro_precision, macro_recall, score_nodes};
use crate::graph::SimilarityGraph;
use crate::model::{
    target_matrix, Architecture, Checkpoint, CheckpointMeta, ClHead, ClHeadConfig, Model, Neighborhoods,
};
use crate::numerics::Tape;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_macro_recall: f64,
    pub val_macro_precision: f64,
    /// Label 0 against the rest; `None` when the val split lacks either side.
    pub val_auc_pr: Option<f64>,
    pub lr: f64,
}

pub const HISTORY_HEADER: &str = "epoch,train_loss,val_macro_recall,val_macro_precision,val_auc_pr,lr";

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::with_capacity(64 * (history.len() + 1));
    out.push_str(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        let auc = r.val_auc_pr.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.epoch, r.train_loss, r.val_macro_recall, r.val_macro_precision, auc, r.lr
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    /// Weights from the epoch with the best validation macro recall.
    pub checkpoint: Checkpoint,
    pub history: Vec<EpochRecord>,
    /// Mean contrastive loss per pretraining epoch, when pretraining ran.
    pub cl_losses: Option<Vec<f64>>,
}

struct PhaseGraphs {
    train: Neighborhoods,
    val: Neighborhoods,
}

/// Trains `model` on the train split, selecting weights by val macro recall
/// (earliest epoch wins ties). `graph` is required for the attention model.
pub fn train_ordinal(
    model: Model,
    corpus: &Corpus,
    graph: Option<&SimilarityGraph>,
    config: &OrdinalTrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    config.validate()?;
    if model.num_classes() != corpus.num_classes() {
        return Err(Error::Data(format!(
            "model predicts {} classes, corpus has {}",
            model.num_classes(),
            corpus.num_classes()
        )));
    }
    let train = corpus.indices_of(Split::Train);
    let val = corpus.indices_of(Split::Val);
    if train.is_empty() {
        return Err(Error::Data("empty train split".into()));
    }
    if val.is_empty() {
        return Err(Error::Data(
            "empty val split; model selection needs validation nodes".into(),
        ));
    }
    let graphs = match (model.arch.uses_graph(), graph) {
        (false, _) => None,
        (true, None) => return Err(Error::InvalidArgument("attention model needs a graph".into())),
        (true, Some(g)) => {
            let splits = corpus.splits();
            if g.num_nodes() != corpus.len() {
                return Err(Error::Data(format!(
                    "graph has {} nodes, corpus has {}",
                    g.num_nodes(),
                    corpus.len()
                )));
            }
            Some(PhaseGraphs {
                train: Neighborhoods::new(g, &phase_neighborhoods(g, &splits, Phase::Train)?)?,
                val: Neighborhoods::new(g, &phase_neighborhoods(g, &splits, Phase::Val)?)?,
            })
        }
    };
    let labels = corpus.labels();
    let val_labels: Vec<u32> = val.iter().map(|&i| labels[i].expect("val rows are labeled")).collect();
    let targets = target_matrix::<f32>(&labels, model.depth())?;
    let features = model.features(corpus.embeddings())?;

    let mut model = model;
    let mut state = OptimizerState::new(&model.params, AdamConfig::default());
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, Model)> = None;
    let mut tape = Tape::<f32>::new();

    for epoch in 1..=config.epochs {
        tape.clear();
        let bound = model.params.bind(&mut tape);
        let x = tape.constant(features.clone());
        let logits = model.forward(&mut tape, &bound, x, graphs.as_ref().map(|g| &g.train))?;
        let loss = bce_ordinal_loss(&mut tape, logits, &targets, &train)?;
        let train_loss = tape.value(loss).data()[0] as f64;
        tape.backward(loss)?;
        let grads = model.params.gradients(&tape, &bound);
        optimizer_step(&mut model.params, &grads, &mut state, config.lr)?;

        let scored = score_nodes(
            &model,
            &features,
            graphs.as_ref().map(|g| &g.val),
            &val,
            config.decode_rule,
        )?;
        let recall = macro_recall(&scored.predictions, &val_labels, corpus.num_classes())?;
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_macro_recall: recall,
            val_macro_precision: macro_precision(&scored.predictions, &val_labels, corpus.num_classes())?,
            val_auc_pr: binary_auc_pr(&scored.class_probs, &val_labels)?,
            lr: config.lr,
        });
        if best.as_ref().is_none_or(|(r, _, _)| recall > *r) {
            best = Some((recall, epoch, model.clone()));
        }
    }

    let (recall, epoch, best_model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            model: best_model,
            meta: CheckpointMeta {
                seed,
                epoch,
                val_macro_recall: Some(recall),
                decode_rule: config.decode_rule,
            },
        },
        history,
        cl_losses: None,
    })
}

/// Optional contrastive pretraining, then reducer and attention layer training.
pub fn train_gat(corpus: &Corpus, graph: &SimilarityGraph, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let depth = corpus.num_classes() - 1;
    let dim = corpus.embeddings().dim();
    let (model, cl_losses) = if config.with_cl {
        let head = ClHead::init(ClHeadConfig::new(dim), config.seed);
        let cl = train_cl(corpus, head, &config.cl, config.seed)?;
        let model =
            Model::init(Architecture::gat(cl.head.config.out_dim, depth), config.seed)?.with_cl_head(cl.head)?;
        (model, Some(cl.epoch_losses))
    } else {
        (Model::init(Architecture::gat(dim, depth), config.seed)?, None)
    };
    let mut out = train_ordinal(model, corpus, Some(graph), &config.gat, config.seed)?;
    out.cl_losses = cl_losses;
    Ok(out)
}

pub fn train_mlp_a(corpus: &Corpus, config: &OrdinalTrainConfig, seed: u64) -> Result<TrainOutcome> {
    let model = Model::init(
        Architecture::mlp_a(corpus.embeddings().dim(), corpus.num_classes() - 1),
        seed,
    )?;
    train_ordinal(model, corpus, None, config, seed)
}

/// Trains the query-answer baseline on `query ‖ answer` embeddings.
pub fn train_mlp_qa(
    corpus: &Corpus,
    queries: &EmbeddingMatrix,
    config: &OrdinalTrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    let qa = qa_corpus(corpus, queries)?;
    let model = Model::init(
        Architecture::mlp_qa(qa.embeddings().dim(), corpus.num_classes() - 1),
        seed,
    )?;
    train_ordinal(model, &qa, None, config, seed)
}

/// `corpus` with each embedding row replaced by `query ‖ answer`.
pub fn qa_corpus(corpus: &Corpus, queries: &EmbeddingMatrix) -> Result<Corpus> {
    let emb = queries.concat_columns(corpus.embeddings())?;
    Corpus::new(corpus.records().to_vec(), emb, corpus.manifest().clone())
}
