use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Split};
use crate::{Error, Result};

/// Train/val/test fractions. Defaults to 70/15/15.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitFractions {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let f = Self { train, val, test };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "split fractions must be positive: {all:?}"
            )));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split fractions must sum to 1: {all:?}"
            )));
        }
        Ok(())
    }

    /// `(train, val, test)` counts: val and test are floored, train takes the rest.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let floor = |f: f64| ((n as f64) * f + 1e-9).floor() as usize;
        let (val, test) = (floor(self.val), floor(self.test));
        (n - val - test, val, test)
    }
}

/// Randomly reassigns every record to train/val/test.
///
/// With `stratified`, each label (and the unlabeled group) is split
/// separately using the same counting rule.
pub fn split_random(corpus: &Corpus, fractions: SplitFractions, seed: u64, stratified: bool) -> Result<Corpus> {
    fractions.validate()?;
    if corpus.len() < 3 {
        return Err(Error::Data(format!(
            "cannot split a corpus of {} records into three parts",
            corpus.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Vec<usize>> = if stratified {
        let mut by_label: std::collections::BTreeMap<Option<u32>, Vec<usize>> = Default::default();
        for (i, r) in corpus.records().iter().enumerate() {
            by_label.entry(r.label).or_default().push(i);
        }
        by_label.into_values().collect()
    } else {
        vec![(0..corpus.len()).collect()]
    };
    let mut splits = vec![Split::Train; corpus.len()];
    for mut group in groups {
        group.shuffle(&mut rng);
        let (_, val, test) = fractions.counts(group.len());
        for (k, &i) in group.iter().enumerate() {
            splits[i] = if k < val {
                Split::Val
            } else if k < val + test {
                Split::Test
            } else {
                Split::Train
            };
        }
    }
    let mut out = corpus.with_splits(&splits);
    out.manifest_mut().split_fractions = fractions;
    out.manifest_mut().seed = seed;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusManifest, EmbeddingMatrix, Record};

    fn corpus(n: usize) -> Corpus {
        let records = (0..n)
            .map(|i| Record {
                id: format!("r{i}"),
                label: Some((i % 4) as u32),
                split: Split::Unlabeled,
                text: None,
            })
            .collect();
        let emb = EmbeddingMatrix::new(n, 1, vec![1.0; n]).unwrap();
        Corpus::new(records, emb, CorpusManifest::new(4, 1)).unwrap()
    }

    fn sizes(c: &Corpus) -> (usize, usize, usize) {
        (
            c.indices_of(Split::Train).len(),
            c.indices_of(Split::Val).len(),
            c.indices_of(Split::Test).len(),
        )
    }

    #[test]
    fn twenty_records() {
        let c = split_random(&corpus(20), SplitFractions::default(), 7, false).unwrap();
        assert_eq!(sizes(&c), (14, 3, 3));
    }

    #[test]
    fn large_corpus_counts() {
        assert_eq!(SplitFractions::default().counts(22000), (15400, 3300, 3300));
    }

    #[test]
    fn deterministic_for_seed() {
        let a = split_random(&corpus(50), SplitFractions::default(), 7, false).unwrap();
        let b = split_random(&corpus(50), SplitFractions::default(), 7, false).unwrap();
        let c = split_random(&corpus(50), SplitFractions::default(), 8, false).unwrap();
        assert_eq!(a.splits(), b.splits());
        assert_ne!(a.splits(), c.splits());
    }

    #[test]
    fn stratified_balances_labels() {
        let c = split_random(&corpus(80), SplitFractions::default(), 1, true).unwrap();
        for label in 0..4u32 {
            let val = c
                .records()
                .iter()
                .filter(|r| r.label == Some(label) && r.split == Split::Val)
                .count();
            assert_eq!(val, 3);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(split_random(&corpus(2), SplitFractions::default(), 0, false).is_err());
        assert!(SplitFractions::new(0.7, 0.2, 0.2).is_err());
        assert!(SplitFractions::new(1.0, 0.0, 0.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn split_is_a_partition(n in 3usize..300, seed in 0u64..1000, strat: bool) {
            let c = split_random(&corpus(n), SplitFractions::default(), seed, strat).unwrap();
            let (tr, va, te) = sizes(&c);
            proptest::prop_assert_eq!(tr + va + te, n);
            proptest::prop_assert!(c.records().iter().all(|r| r.split != Split::Unlabeled));
        }
    }
}
