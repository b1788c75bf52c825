//! Fixtures shared by the benchmarks.

use halograph::corpus::synthetic::{generate, SyntheticConfig};
use halograph::corpus::Corpus;
use halograph::graph::{build_graph, GraphConfig, SimilarityGraph};

/// Default synthetic corpus with `nodes` rows and its graph at the default threshold.
pub fn fixture(nodes: usize) -> (Corpus, SimilarityGraph) {
    let corpus = generate(&SyntheticConfig {
        nodes,
        ..Default::default()
    })
    .expect("valid synthetic config");
    let graph = build_graph(corpus.embeddings(), &GraphConfig::default()).expect("graph builds");
    (corpus, graph)
}
