mod common;

use halograph::corpus::synthetic::{generate, SyntheticConfig};
use halograph::corpus::{Corpus, EmbeddingMatrix, Split};
use halograph::eval::evaluate;
use halograph::graph::{build_graph, GraphConfig};
use halograph::training::{
    history_csv, qa_corpus, train_gat, train_mlp_a, train_mlp_qa, OrdinalTrainConfig, Phase, TrainConfig,
    HISTORY_HEADER,
};

fn small() -> Corpus {
    generate(&SyntheticConfig {
        nodes: 200,
        seed: 3,
        ..Default::default()
    })
    .unwrap()
}

fn config(epochs: usize) -> TrainConfig {
    TrainConfig {
        seed: 3,
        gat: OrdinalTrainConfig {
            epochs,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn separable_corpus_reaches_high_val_recall() {
    let c = generate(&SyntheticConfig::default()).unwrap();
    let g = build_graph(c.embeddings(), &GraphConfig::default()).unwrap();
    let out = train_gat(&c, &g, &config(100)).unwrap();
    assert!(out.checkpoint.meta.val_macro_recall.unwrap() >= 0.95);
}

#[test]
fn history_is_reproducible_and_selection_is_earliest_best() {
    let c = small();
    let g = build_graph(c.embeddings(), &GraphConfig::default()).unwrap();
    let a = train_gat(&c, &g, &config(30)).unwrap();
    let b = train_gat(&c, &g, &config(30)).unwrap();
    assert_eq!(history_csv(&a.history), history_csv(&b.history));
    assert_eq!(a.checkpoint, b.checkpoint);

    let best = a.history.iter().map(|h| h.val_macro_recall).fold(f64::MIN, f64::max);
    let first = a.history.iter().find(|h| h.val_macro_recall == best).unwrap();
    assert_eq!(a.checkpoint.meta.epoch, first.epoch);
    assert_eq!(a.checkpoint.meta.val_macro_recall, Some(best));

    let report = evaluate(&a.checkpoint, &c, Some(&g), Phase::Val).unwrap();
    assert_eq!(report.macro_recall, best);
}

#[test]
fn history_csv_layout() {
    let c = small();
    let g = build_graph(c.embeddings(), &GraphConfig::default()).unwrap();
    let out = train_gat(&c, &g, &config(3)).unwrap();
    let csv = history_csv(&out.history);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], HISTORY_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,"));
    assert_eq!(lines[1].split(',').count(), 6);
}

#[test]
fn empty_splits_are_errors() {
    let c = small();
    let g = build_graph(c.embeddings(), &GraphConfig::default()).unwrap();
    let no_val: Vec<_> = c
        .records()
        .iter()
        .cloned()
        .map(|mut r| {
            if r.split == Split::Val {
                r.split = Split::Train;
            }
            r
        })
        .collect();
    let c2 = Corpus::new(no_val, c.embeddings().clone(), c.manifest().clone()).unwrap();
    assert!(train_gat(&c2, &g, &config(2)).is_err());

    let no_train: Vec<_> = c
        .records()
        .iter()
        .cloned()
        .map(|mut r| {
            if r.split == Split::Train {
                r.split = Split::Test;
            }
            r
        })
        .collect();
    let c3 = Corpus::new(no_train, c.embeddings().clone(), c.manifest().clone()).unwrap();
    assert!(train_gat(&c3, &g, &config(2)).is_err());
}

#[test]
fn mismatched_graph_is_rejected() {
    let c = small();
    let other = generate(&SyntheticConfig {
        nodes: 50,
        ..Default::default()
    })
    .unwrap();
    let g = build_graph(other.embeddings(), &GraphConfig::default()).unwrap();
    assert!(train_gat(&c, &g, &config(2)).is_err());
}

#[test]
fn pretraining_feeds_projected_features() {
    let c = small();
    let g = build_graph(c.embeddings(), &GraphConfig::default()).unwrap();
    let mut cfg = config(5);
    cfg.with_cl = true;
    cfg.cl.epochs = 3;
    cfg.cl.batch_size = 32;
    let out = train_gat(&c, &g, &cfg).unwrap();
    let head = out.checkpoint.model.cl_head.as_ref().unwrap();
    assert_eq!(head.config.in_dim, 64);
    assert_eq!(out.checkpoint.model.arch.input_dim(), head.config.out_dim);
    assert_eq!(out.cl_losses.as_ref().unwrap().len(), 3);
    evaluate(&out.checkpoint, &c, Some(&g), Phase::Test).unwrap();
}

#[test]
fn baselines_train_without_a_graph() {
    let c = small();
    let cfg = config(20).gat;
    let mlp = train_mlp_a(&c, &cfg, 0).unwrap();
    assert_eq!(mlp.checkpoint.model.arch.name(), "mlp-a");
    evaluate(&mlp.checkpoint, &c, None, Phase::Test).unwrap();

    let queries = EmbeddingMatrix::new(c.len(), 8, vec![0.5; c.len() * 8]).unwrap();
    let qa = train_mlp_qa(&c, &queries, &cfg, 0).unwrap();
    assert_eq!(qa.checkpoint.model.arch.input_dim(), 72);
    let joined = qa_corpus(&c, &queries).unwrap();
    evaluate(&qa.checkpoint, &joined, None, Phase::Test).unwrap();
}
