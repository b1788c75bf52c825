//! Losses, optimizers, neighborhood masking and the training loops.

mod config;
mod contrastive;
mod fit;
mod loss;
mod mask;
mod optim;

pub use config::{
    ClTrainConfig, OrdinalTrainConfig, TrainConfig, DEFAULT_CL_BATCH, DEFAULT_CL_EPOCHS, DEFAULT_CL_TEMPERATURE,
    DEFAULT_CL_WEIGHT_DECAY, DEFAULT_EPOCHS, DEFAULT_LR,
};
pub use contrastive::{train_cl, ClOutcome};
pub use fit::{
    history_csv, qa_corpus, train_gat, train_mlp_a, train_mlp_qa, train_ordinal, EpochRecord, TrainOutcome,
    HISTORY_HEADER,
};
pub use loss::{bce_ordinal_loss, supcon_loss};
pub use mask::{phase_neighborhoods, Phase, PhaseMask};
pub use optim::{lr_schedule, optimizer_step, AdamConfig, OptimizerState, DEFAULT_LR_MIN};
