use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ClTrainConfig;
use super::loss::supcon_loss;
use super::optim::{lr_schedule, optimizer_step, AdamConfig, OptimizerState};
use crate::corpus::{Corpus, Split};
use crate::model::ClHead;
use crate::numerics::{Tape, Tensor};
use crate::{Error, Result};

const SHUFFLE_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct ClOutcome {
    pub head: ClHead,
    /// Mean loss over the batches of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Pretrains `head` with the supervised contrastive loss on globally shuffled
/// train-split mini-batches, AdamW and a per-epoch cosine schedule.
/// Batches without any same-label pair are skipped.
pub fn train_cl(corpus: &Corpus, head: ClHead, config: &ClTrainConfig, seed: u64) -> Result<ClOutcome> {
    config.validate()?;
    let emb = corpus.embeddings();
    if emb.dim() != head.config.in_dim {
        return Err(Error::shape(
            "train_cl",
            format!("embedding dim {} but head expects {}", emb.dim(), head.config.in_dim),
        ));
    }
    let train = corpus.indices_of(Split::Train);
    if train.is_empty() {
        return Err(Error::Data("empty train split".into()));
    }
    if config.batch_size > train.len() {
        return Err(Error::InvalidArgument(format!(
            "batch size {} exceeds the {} train nodes",
            config.batch_size,
            train.len()
        )));
    }
    let labels = corpus.labels();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SHUFFLE_STREAM);
    let mut head = head;
    let mut state = OptimizerState::new(&head.params, AdamConfig::adamw(config.weight_decay));
    let mut order = train;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut tape = Tape::<f32>::new();
    let d = emb.dim();

    for epoch in 0..config.epochs {
        let lr = lr_schedule(epoch, config.epochs, config.lr, config.lr_min)?;
        order.shuffle(&mut rng);
        let (mut total, mut batches) = (0.0f64, 0usize);
        for chunk in order.chunks(config.batch_size) {
            let y: Vec<u32> = chunk
                .iter()
                .map(|&i| labels[i].expect("train rows are labeled"))
                .collect();
            if !has_positive_pair(&y) {
                continue;
            }
            let mut xs = Vec::with_capacity(chunk.len() * d);
            for &i in chunk {
                xs.extend_from_slice(emb.row(i));
            }
            tape.clear();
            let bound = head.params.bind(&mut tape);
            let x = tape.constant(Tensor::matrix(chunk.len(), d, xs)?);
            let z = ClHead::forward(&mut tape, &bound, x)?;
            let loss = supcon_loss(&mut tape, z, &y, config.temperature)?;
            total += tape.value(loss).data()[0] as f64;
            batches += 1;
            tape.backward(loss)?;
            let grads = head.params.gradients(&tape, &bound);
            optimizer_step(&mut head.params, &grads, &mut state, lr)?;
        }
        if batches == 0 {
            return Err(Error::Data(
                "no contrastive batch contains a pair with a shared label".into(),
            ));
        }
        epoch_losses.push(total / batches as f64);
    }
    Ok(ClOutcome { head, epoch_losses })
}

fn has_positive_pair(labels: &[u32]) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(labels.len());
    labels.iter().any(|l| !seen.insert(*l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_pairs() {
        assert!(has_positive_pair(&[0, 1, 0]));
        assert!(!has_positive_pair(&[0, 1, 2]));
    }
}
