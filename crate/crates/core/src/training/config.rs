use serde::{Deserialize, Serialize};

use super::optim::DEFAULT_LR_MIN;
use crate::model::DecodeRule;
use crate::{Error, Result};

pub const DEFAULT_EPOCHS: usize = 500;
pub const DEFAULT_LR: f64 = 1e-3;
pub const DEFAULT_CL_EPOCHS: usize = 1000;
pub const DEFAULT_CL_BATCH: usize = 256;
pub const DEFAULT_CL_TEMPERATURE: f64 = 0.07;
pub const DEFAULT_CL_WEIGHT_DECAY: f64 = 1e-2;

/// Full-batch ordinal regression with Adam at a fixed learning rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrdinalTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub decode_rule: DecodeRule,
}

impl Default for OrdinalTrainConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            lr: DEFAULT_LR,
            decode_rule: DecodeRule::default(),
        }
    }
}

impl OrdinalTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        positive("lr", self.lr)
    }
}

/// Supervised contrastive pretraining of the projection head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_min: f64,
    pub weight_decay: f64,
    pub temperature: f64,
}

impl Default for ClTrainConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_CL_EPOCHS,
            batch_size: DEFAULT_CL_BATCH,
            lr: DEFAULT_LR,
            lr_min: DEFAULT_LR_MIN,
            weight_decay: DEFAULT_CL_WEIGHT_DECAY,
            temperature: DEFAULT_CL_TEMPERATURE,
        }
    }
}

impl ClTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("cl epochs must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidArgument("cl batch size must be at least 2".into()));
        }
        positive("cl lr", self.lr)?;
        positive("cl temperature", self.temperature)?;
        if !(self.lr_min >= 0.0 && self.lr_min <= self.lr) {
            return Err(Error::InvalidArgument(format!(
                "cl lr_min {} outside [0, lr]",
                self.lr_min
            )));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidArgument(format!("weight decay {}", self.weight_decay)));
        }
        Ok(())
    }
}

/// Everything `train_gat` needs besides data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub with_cl: bool,
    pub gat: OrdinalTrainConfig,
    pub cl: ClTrainConfig,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.gat.validate()?;
        if self.with_cl {
            self.cl.validate()?;
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}
