//! Phase-dependent neighborhood masking.
//!
//! | phase | targets | admissible sources |
//! |-------|---------|--------------------|
//! | train | train   | anything outside val and test |
//! | val   | val     | anything outside test |
//! | test  | test    | every node |
//!
//! Nodes outside the target set keep only their self-loop.

use serde::{Deserialize, Serialize};

use crate::corpus::Split;
use crate::graph::SimilarityGraph;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Val,
    Test,
}

impl Phase {
    pub fn split(self) -> Split {
        match self {
            Phase::Train => Split::Train,
            Phase::Val => Split::Val,
            Phase::Test => Split::Test,
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Phase::Train),
            "val" => Ok(Phase::Val),
            "test" => Ok(Phase::Test),
            other => Err(Error::InvalidArgument(format!("unknown phase {other:?}"))),
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.split().as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseMask {
    phase: Phase,
    splits: Vec<Split>,
}

impl PhaseMask {
    pub fn new(phase: Phase, splits: Vec<Split>) -> Self {
        Self { phase, splits }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn num_nodes(&self) -> usize {
        self.splits.len()
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn is_target(&self, i: usize) -> bool {
        self.splits[i] == self.phase.split()
    }

    /// Whether the edge `j → i` may carry a message in this phase.
    pub fn admissible(&self, i: usize, j: usize) -> bool {
        if !self.is_target(i) {
            return false;
        }
        match self.phase {
            Phase::Train => !matches!(self.splits[j], Split::Val | Split::Test),
            Phase::Val => self.splits[j] != Split::Test,
            Phase::Test => true,
        }
    }

    /// Nodes the phase predicts for, ascending.
    pub fn targets(&self) -> Vec<usize> {
        (0..self.splits.len()).filter(|&i| self.is_target(i)).collect()
    }
}

pub fn phase_neighborhoods(graph: &SimilarityGraph, splits: &[Split], phase: Phase) -> Result<PhaseMask> {
    if splits.len() != graph.num_nodes() {
        return Err(Error::Data(format!(
            "{} split assignments for a graph of {} nodes",
            splits.len(),
            graph.num_nodes()
        )));
    }
    Ok(PhaseMask::new(phase, splits.to_vec()))
}
