use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use halograph::corpus::synthetic::{generate, SyntheticConfig};
use halograph::corpus::{
    load_corpus, load_corpus_manifest, read_embeddings, save_corpus, split_random, Corpus, Split, SplitFractions,
};
use halograph::eval::{evaluate as evaluate_phase, recover_labels, EvalReport};
use halograph::graph::{
    build_graph as build, degree_stats, read_graph, write_graph, DegreeStats, GraphConfig, SimilarityGraph,
};
use halograph::model::{knn_classify, Checkpoint, DecodeRule, KnnConfig};
use halograph::training::{
    history_csv, qa_corpus, train_gat, train_mlp_a, train_mlp_qa, OrdinalTrainConfig, Phase, TrainConfig,
};

use crate::error::{CliError, CliResult};
use crate::manifest::{sibling, Recorder};
use crate::{
    BaselineArgs, BuildGraphArgs, CorpusArgs, DecodeRuleArg, EvaluateArgs, Format, Method, PhaseArg, RecoverArgs,
    SplitArgs, StatsArgs, SynthArgs, TrainArgs,
};

impl From<PhaseArg> for Phase {
    fn from(p: PhaseArg) -> Self {
        match p {
            PhaseArg::Val => Phase::Val,
            PhaseArg::Test => Phase::Test,
        }
    }
}

impl From<DecodeRuleArg> for DecodeRule {
    fn from(r: DecodeRuleArg) -> Self {
        match r {
            DecodeRuleArg::ConsecutiveScan => DecodeRule::ConsecutiveScan,
            DecodeRuleArg::CountPositives => DecodeRule::CountPositives,
        }
    }
}

fn load(args: &CorpusArgs, rec: &mut Recorder) -> CliResult<Corpus> {
    match (&args.corpus, &args.embeddings, &args.labels) {
        (Some(manifest), _, _) => {
            let corpus = load_corpus_manifest(manifest)?;
            rec.input(manifest);
            let base = manifest.parent().unwrap_or_else(|| Path::new("."));
            for name in [&corpus.manifest().embeddings, &corpus.manifest().labels]
                .into_iter()
                .flatten()
            {
                rec.input(&base.join(name));
            }
            Ok(corpus)
        }
        (None, Some(emb), Some(labels)) => {
            let corpus = load_corpus(emb, labels, args.num_classes)?;
            rec.input(emb);
            rec.input(labels);
            Ok(corpus)
        }
        _ => Err(CliError::Usage(
            "give a corpus with --corpus, or with both --embeddings and --labels".into(),
        )),
    }
}

fn load_graph(path: &Path, rec: &mut Recorder) -> CliResult<SimilarityGraph> {
    let g = read_graph(path)?;
    rec.input(path);
    Ok(g)
}

fn emit(text: &str) -> CliResult<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Data(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn print_report(report: &EvalReport, format: Format) -> CliResult<()> {
    match format {
        Format::Text => emit(&report.to_text()),
        Format::Json => emit(&report.to_json()?),
        Format::Csv => emit(&report.to_csv()),
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    halograph::write_atomic(path, text.as_bytes())?;
    Ok(())
}

/// Registers the three files `save_corpus` writes under `prefix`.
fn corpus_outputs(rec: &mut Recorder, prefix: &Path) {
    for suffix in [".emb", ".labels.jsonl", ".manifest.json"] {
        rec.output(&sibling(prefix, suffix));
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

pub fn synth(a: SynthArgs) -> CliResult<()> {
    let base = SyntheticConfig::default();
    let config = SyntheticConfig {
        nodes: a.nodes,
        dim: a.dim,
        classes: a.classes,
        std: a.std.unwrap_or(base.std),
        center_angle: a.center_angle.unwrap_or(base.center_angle),
        noise_rank: a.noise_rank.unwrap_or(base.noise_rank),
        seed: a.seed,
        ..base
    }
    .with_noise_scale(a.noise_scale);
    let mut rec = Recorder::start("synth");
    let corpus = generate(&config)?;
    corpus_outputs(&mut rec, &a.out);
    let manifest = save_corpus(&corpus, &a.out)?;
    rec.finish(
        &a.out,
        Some(a.seed),
        json!({
            "nodes": config.nodes,
            "dim": config.dim,
            "classes": config.classes,
            "std": config.std,
            "center_angle": config.center_angle,
            "noise_rank": config.noise_rank,
        }),
    )?;
    emit(&format!(
        "wrote {} ({} rows, dim {})\n",
        display(&manifest),
        corpus.len(),
        corpus.embeddings().dim()
    ))?;
    Ok(())
}

pub fn split(a: SplitArgs) -> CliResult<()> {
    let mut rec = Recorder::start("split");
    let corpus = load(&a.corpus, &mut rec)?;
    let fractions = SplitFractions::new(a.train, a.val, a.test)?;
    let out = split_random(&corpus, fractions, a.seed, a.stratified)?;
    corpus_outputs(&mut rec, &a.out);
    let manifest = save_corpus(&out, &a.out)?;
    rec.finish(
        &a.out,
        Some(a.seed),
        json!({ "fractions": fractions, "stratified": a.stratified }),
    )?;
    let count = |s| out.indices_of(s).len();
    emit(&format!(
        "wrote {}: train {}, val {}, test {}, unlabeled {}\n",
        display(&manifest),
        count(Split::Train),
        count(Split::Val),
        count(Split::Test),
        count(Split::Unlabeled)
    ))?;
    Ok(())
}

fn stats_text(s: &DegreeStats, tau: f32) -> String {
    let mut out = format!(
        "nodes {}\nedges {}\ntau {}\ndegree min {} max {} mean {:.4} median {}\nisolated {}\nhistogram\n",
        s.nodes, s.edges, tau, s.min, s.max, s.mean, s.median, s.isolated_count
    );
    for b in &s.histogram {
        out.push_str(&format!("  [{}, {}) {}\n", b.lo, b.hi, b.count));
    }
    out
}

pub fn build_graph(a: BuildGraphArgs) -> CliResult<()> {
    let config = GraphConfig::new(a.tau, a.block_size)?;
    let mut rec = Recorder::start("build-graph");
    let corpus = load(&a.corpus, &mut rec)?;
    let graph = build(corpus.embeddings(), &config)?;
    rec.output(&a.out);
    write_graph(&a.out, &graph)?;
    let stats = degree_stats(&graph);
    let stats_path = sibling(&a.out, ".stats.json");
    rec.output(&stats_path);
    write_text(&stats_path, &(serde_json::to_string_pretty(&stats)? + "\n"))?;
    rec.finish(&a.out, None, json!({ "tau": a.tau, "block_size": a.block_size }))?;
    emit(&stats_text(&stats, graph.tau()))?;
    Ok(())
}

pub(crate) fn train_config(a: &TrainArgs) -> CliResult<TrainConfig> {
    let mut config = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            toml::from_str::<TrainConfig>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => TrainConfig::default(),
    };
    if a.with_cl {
        config.with_cl = true;
    }
    if let Some(v) = a.seed {
        config.seed = v;
    }
    if let Some(v) = a.epochs {
        config.gat.epochs = v;
    }
    if let Some(v) = a.lr {
        config.gat.lr = v;
    }
    if let Some(v) = a.decode_rule {
        config.gat.decode_rule = v.into();
    }
    if let Some(v) = a.cl_epochs {
        config.cl.epochs = v;
    }
    if let Some(v) = a.cl_batch {
        config.cl.batch_size = v;
    }
    if let Some(v) = a.cl_temp {
        config.cl.temperature = v;
    }
    if let Some(v) = a.cl_lr {
        config.cl.lr = v;
    }
    if let Some(v) = a.cl_weight_decay {
        config.cl.weight_decay = v;
    }
    config.validate()?;
    Ok(config)
}

pub fn train(a: TrainArgs) -> CliResult<()> {
    let config = train_config(&a)?;
    let mut rec = Recorder::start("train");
    if let Some(path) = &a.config {
        rec.input(path);
    }
    let corpus = load(&a.corpus, &mut rec)?;
    let graph = load_graph(&a.graph, &mut rec)?;
    let outcome = train_gat(&corpus, &graph, &config)?;
    rec.output(&a.out);
    outcome.checkpoint.write(&a.out)?;
    let history_path = sibling(&a.out, ".history.csv");
    rec.output(&history_path);
    write_text(&history_path, &history_csv(&outcome.history))?;
    if let Some(losses) = &outcome.cl_losses {
        let mut csv = String::from("epoch,loss\n");
        for (i, l) in losses.iter().enumerate() {
            csv.push_str(&format!("{},{}\n", i + 1, l));
        }
        let path = sibling(&a.out, ".cl_loss.csv");
        rec.output(&path);
        write_text(&path, &csv)?;
    }
    rec.finish(&a.out, Some(config.seed), serde_json::to_value(&config)?)?;
    let meta = &outcome.checkpoint.meta;
    emit(&format!(
        "best epoch {} of {}, val macro recall {:.4}\n",
        meta.epoch,
        outcome.history.len(),
        meta.val_macro_recall.unwrap_or(f64::NAN)
    ))?;
    emit(&format!("wrote {}\n", display(&a.out)))?;
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> CliResult<()> {
    let mut rec = Recorder::start("evaluate");
    let ckpt = Checkpoint::read(&a.ckpt)?;
    rec.input(&a.ckpt);
    let corpus = load(&a.corpus, &mut rec)?;
    let graph = a.graph.as_deref().map(|p| load_graph(p, &mut rec)).transpose()?;
    if ckpt.model.arch.uses_graph() && graph.is_none() {
        return Err(CliError::Usage(format!(
            "{} checkpoints need --graph",
            ckpt.model.arch.name()
        )));
    }
    let mut report = evaluate_phase(&ckpt, &corpus, graph.as_ref(), a.phase.into())?;
    report.metadata.checkpoint = Some(display(&a.ckpt));
    report.metadata.graph = a.graph.as_deref().map(display);
    print_report(&report, a.format)?;
    if let Some(out) = &a.out {
        rec.output(out);
        write_text(out, &report.to_json()?)?;
        rec.finish(out, Some(ckpt.meta.seed), json!({ "phase": Phase::from(a.phase) }))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RecoveredRow {
    row: usize,
    node: usize,
    prediction: u32,
    class_probs: Vec<f64>,
    cumulative: Vec<f64>,
}

pub fn recover(a: RecoverArgs) -> CliResult<()> {
    let mut rec = Recorder::start("recover");
    let ckpt = Checkpoint::read(&a.ckpt)?;
    rec.input(&a.ckpt);
    let base = load(
        &CorpusArgs {
            corpus: Some(a.base_corpus.clone()),
            embeddings: None,
            labels: None,
            num_classes: 0,
        },
        &mut rec,
    )?;
    let graph = match &a.graph {
        Some(p) => load_graph(p, &mut rec)?,
        None if ckpt.model.arch.uses_graph() => {
            return Err(CliError::Usage(format!(
                "{} checkpoints need --graph",
                ckpt.model.arch.name()
            )))
        }
        None => SimilarityGraph::empty(base.len(), base.manifest().tau),
    };
    let new = read_embeddings(&a.new_embeddings)?;
    rec.input(&a.new_embeddings);
    let scored = recover_labels(&ckpt, &base, &graph, &new)?;
    let n = base.len();
    let mut out = String::new();
    for (k, &node) in scored.nodes.iter().enumerate() {
        let row = RecoveredRow {
            row: node - n,
            node,
            prediction: scored.predictions[k],
            class_probs: scored.class_probs[k].clone(),
            cumulative: scored.cumulative[k].clone(),
        };
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
    }
    rec.output(&a.out);
    write_text(&a.out, &out)?;
    rec.finish(&a.out, Some(ckpt.meta.seed), json!({ "rows": new.rows() }))?;
    emit(&format!(
        "wrote {} predictions to {}\n",
        scored.nodes.len(),
        display(&a.out)
    ))?;
    Ok(())
}

fn labeled(corpus: &Corpus, split: Split) -> CliResult<(Vec<usize>, Vec<u32>)> {
    let labels = corpus.labels();
    let rows = corpus.indices_of(split);
    let values = rows
        .iter()
        .map(|&i| labels[i].ok_or_else(|| CliError::Data(format!("{} row {i} has no label", split.as_str()))))
        .collect::<CliResult<Vec<u32>>>()?;
    Ok((rows, values))
}

pub fn baseline(a: BaselineArgs) -> CliResult<()> {
    let mut rec = Recorder::start("baseline");
    let corpus = load(&a.corpus, &mut rec)?;
    let phase: Phase = a.phase.into();
    let ordinal = OrdinalTrainConfig {
        epochs: a.epochs,
        lr: a.lr,
        ..Default::default()
    };
    if a.queries.is_some() && a.method != Method::MlpQa {
        return Err(CliError::Usage("--queries only applies to --method mlp-qa".into()));
    }
    let (report, config) = match a.method {
        Method::Knn => {
            let (train_rows, train_labels) = labeled(&corpus, Split::Train)?;
            let (rows, truth) = labeled(&corpus, if phase == Phase::Val { Split::Val } else { Split::Test })?;
            let knn = KnnConfig {
                k: a.k,
                ..Default::default()
            };
            let emb = corpus.embeddings();
            let out = knn_classify(
                &emb.select(&train_rows),
                &train_labels,
                &emb.select(&rows),
                &knn,
                corpus.num_classes(),
            )?;
            let report = EvalReport::from_predictions(
                phase,
                "knn",
                &out.labels,
                &truth,
                &out.class_scores,
                corpus.num_classes(),
            )?;
            (report, serde_json::to_value(knn)?)
        }
        Method::MlpA | Method::MlpQa => {
            ordinal.validate()?;
            let (outcome, eval_corpus) = if a.method == Method::MlpA {
                (train_mlp_a(&corpus, &ordinal, a.seed)?, corpus)
            } else {
                let path = a
                    .queries
                    .as_deref()
                    .ok_or_else(|| CliError::Usage("--method mlp-qa needs --queries".into()))?;
                let queries = read_embeddings(path)?;
                rec.input(path);
                let outcome = train_mlp_qa(&corpus, &queries, &ordinal, a.seed)?;
                (outcome, qa_corpus(&corpus, &queries)?)
            };
            if let Some(path) = &a.ckpt_out {
                rec.output(path);
                outcome.checkpoint.write(path)?;
            }
            let report = evaluate_phase(&outcome.checkpoint, &eval_corpus, None, phase)?;
            (report, serde_json::to_value(&ordinal)?)
        }
    };
    print_report(&report, a.format)?;
    if let Some(out) = &a.out {
        rec.output(out);
        write_text(out, &report.to_json()?)?;
    }
    if let Some(primary) = a.out.as_deref().or(a.ckpt_out.as_deref()) {
        let seed = (a.method != Method::Knn).then_some(a.seed);
        rec.finish(
            primary,
            seed,
            json!({ "method": report.metadata.model, "phase": phase, "settings": config }),
        )?;
    }
    Ok(())
}

pub fn stats(a: StatsArgs) -> CliResult<()> {
    let graph = read_graph(&a.graph)?;
    let s = degree_stats(&graph);
    if a.json {
        emit(&format!("{}\n", serde_json::to_string_pretty(&s)?))?;
    } else {
        emit(&stats_text(&s, graph.tau()))?;
    }
    Ok(())
}
