//! Cumulative binary encoding of ordinal labels.
//!
//! Label `L` over `depth` thresholds sets threshold `i` (1-indexed) when
//! `i ≤ L`, so a sample counts as belonging to every lower label too.

use serde::{Deserialize, Serialize};

use crate::numerics::{Scalar, Tensor};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrdinalTarget {
    bits: Vec<u8>,
}

impl OrdinalTarget {
    pub fn depth(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn as_probs(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| b as f64).collect()
    }
}

pub fn encode_ordinal(label: u32, depth: usize) -> Result<OrdinalTarget> {
    if label as usize > depth {
        return Err(Error::Data(format!("label {label} exceeds ordinal depth {depth}")));
    }
    Ok(OrdinalTarget {
        bits: (1..=depth).map(|i| u8::from(i <= label as usize)).collect(),
    })
}

/// How cumulative probabilities become a single label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeRule {
    /// Largest `m` with `probs[1..=m]` all above 0.5.
    #[default]
    ConsecutiveScan,
    /// Number of thresholds above 0.5.
    CountPositives,
}

pub fn decode_ordinal(probs: &[f64]) -> u32 {
    decode_with(probs, DecodeRule::ConsecutiveScan)
}

pub fn decode_with(probs: &[f64], rule: DecodeRule) -> u32 {
    match rule {
        DecodeRule::ConsecutiveScan => probs.iter().take_while(|&&p| p > 0.5).count() as u32,
        DecodeRule::CountPositives => probs.iter().filter(|&&p| p > 0.5).count() as u32,
    }
}

/// Distribution over `depth + 1` labels from cumulative probabilities.
///
/// The probabilities are first clamped to be non-increasing; then
/// `P(L = k) = p_k − p_{k+1}` with `p_0 = 1` and `p_{depth+1} = 0`.
pub fn class_probs(probs: &[f64]) -> Vec<f64> {
    let mut clamped = Vec::with_capacity(probs.len() + 2);
    clamped.push(1.0f64);
    for &p in probs {
        let prev = *clamped.last().unwrap();
        clamped.push(p.clamp(0.0, 1.0).min(prev));
    }
    clamped.push(0.0);
    clamped.windows(2).map(|w| w[0] - w[1]).collect()
}

/// `n × depth` target matrix; rows without a label are all zero.
pub fn target_matrix<T: Scalar>(labels: &[Option<u32>], depth: usize) -> Result<Tensor<T>> {
    let mut data = Vec::with_capacity(labels.len() * depth);
    for l in labels {
        match l {
            Some(l) => data.extend(encode_ordinal(*l, depth)?.bits.iter().map(|&b| T::of(b as f64))),
            None => data.extend(std::iter::repeat_n(T::zero(), depth)),
        }
    }
    Tensor::matrix(labels.len(), depth, data)
}
