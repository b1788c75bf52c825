//! Labeled statement corpora: embeddings, ordinal labels and splits.

mod io;
mod remap;
mod split;
pub mod synthetic;

use serde::{Deserialize, Serialize};

pub use io::{
    load_corpus, load_corpus_manifest, read_embeddings, read_labels, save_corpus, write_embeddings, write_labels,
    EMBEDDING_MAGIC, EMBEDDING_VERSION,
};
pub use remap::{remap_label, remap_labels, LabelScheme};
pub use split::{split_random, SplitFractions};

use crate::{Error, Result};

/// Partition a record belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Unlabeled,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unlabeled => "unlabeled",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "unlabeled" => Ok(Split::Unlabeled),
            other => Err(Error::InvalidArgument(format!("unknown split {other:?}"))),
        }
    }
}

/// One line of the labels file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u32>,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Dense `rows × dim` sentence embeddings; every row finite and nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != rows * dim {
            return Err(Error::Data(format!(
                "embedding matrix {rows}x{dim} needs {} values, got {}",
                rows * dim,
                values.len()
            )));
        }
        if dim == 0 {
            return Err(Error::Data("embedding dimension is zero".into()));
        }
        for (r, row) in values.chunks(dim).enumerate() {
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::Data(format!("non-finite embedding value in row {r}")));
            }
            if row.iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroNorm { row: r });
            }
        }
        Ok(Self { rows, dim, values })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Data("ragged embedding rows".into()));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Self {
            rows: rows.len(),
            dim: self.dim,
            values,
        }
    }

    /// Row-wise concatenation `self ‖ other`.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Data(format!(
                "embedding dims differ: {} vs {}",
                self.dim, other.dim
            )));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Self {
            rows: self.rows + other.rows,
            dim: self.dim,
            values,
        })
    }

    /// Column-wise concatenation: row `i` becomes `self[i] ‖ other[i]`.
    pub fn concat_columns(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Data(format!(
                "row counts differ: {} vs {}",
                self.rows, other.rows
            )));
        }
        let mut values = Vec::with_capacity(self.values.len() + other.values.len());
        for i in 0..self.rows {
            values.extend_from_slice(self.row(i));
            values.extend_from_slice(other.row(i));
        }
        Ok(Self {
            rows: self.rows,
            dim: self.dim + other.dim,
            values,
        })
    }
}

/// Corpus-level metadata, stored as JSON next to the data files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub num_classes: usize,
    pub dim: usize,
    #[serde(default = "default_tau")]
    pub tau: f32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub provenance: String,
    #[serde(default)]
    pub split_fractions: SplitFractions,
    /// Raw label names in ordinal order, when the labels were remapped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_order: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
}

fn default_tau() -> f32 {
    crate::graph::DEFAULT_TAU
}

impl CorpusManifest {
    pub fn new(num_classes: usize, dim: usize) -> Self {
        Self {
            num_classes,
            dim,
            tau: default_tau(),
            seed: 0,
            provenance: String::new(),
            split_fractions: SplitFractions::default(),
            label_order: None,
            embeddings: None,
            labels: None,
        }
    }
}

/// Records aligned row-for-row with their embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    records: Vec<Record>,
    embeddings: EmbeddingMatrix,
    manifest: CorpusManifest,
}

impl Corpus {
    pub fn new(records: Vec<Record>, embeddings: EmbeddingMatrix, manifest: CorpusManifest) -> Result<Self> {
        if records.len() != embeddings.rows() {
            return Err(Error::Data(format!(
                "row-count disagreement: {} labels vs {} embedding rows",
                records.len(),
                embeddings.rows()
            )));
        }
        if manifest.num_classes < 2 {
            return Err(Error::Data(format!(
                "num_classes must be at least 2, got {}",
                manifest.num_classes
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Data(format!("duplicate id {:?} at row {i}", r.id)));
            }
            match r.label {
                Some(l) if l as usize >= manifest.num_classes => {
                    return Err(Error::Data(format!(
                        "label {l} out of range [0, {}) at row {i}",
                        manifest.num_classes
                    )))
                }
                None if r.split != Split::Unlabeled => return Err(Error::Data(format!("missing label at row {i}"))),
                _ => {}
            }
        }
        let mut manifest = manifest;
        manifest.dim = embeddings.dim();
        Ok(Self {
            records,
            embeddings,
            manifest,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn embeddings(&self) -> &EmbeddingMatrix {
        &self.embeddings
    }

    pub fn manifest(&self) -> &CorpusManifest {
        &self.manifest
    }

    pub fn manifest_mut(&mut self) -> &mut CorpusManifest {
        &mut self.manifest
    }

    pub fn num_classes(&self) -> usize {
        self.manifest.num_classes
    }

    pub fn splits(&self) -> Vec<Split> {
        self.records.iter().map(|r| r.split).collect()
    }

    /// Labels with unlabeled rows reported as `None`.
    pub fn labels(&self) -> Vec<Option<u32>> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn indices_of(&self, split: Split) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.split == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub(crate) fn with_splits(&self, splits: &[Split]) -> Self {
        let mut out = self.clone();
        for (r, &s) in out.records.iter_mut().zip(splits) {
            r.split = s;
        }
        out
    }
}
