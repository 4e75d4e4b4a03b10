//! Feed-forward MMAP approximator, its optimizer and the training loops.
//!
//! The network maps the 0/1 evidence vector (in the partition's evidence
//! order) to one sigmoid output per query variable.

mod adam;
mod mlp;
mod train;

pub use adam::{adam_step, scheduled_lr, AdamParams, AdamState};
pub use mlp::{init_model, ForwardCache, Gradients, Layer, LayerDoc, MlpModel, ModelDoc, ModelMeta, Mode, LOGIT_CLAMP};
pub use train::{
    cross_validate_alpha, fold_indices, mean_log_likelihood, predict_mmap, predict_soft, round_and_score, train_ssmp,
    train_supervised, AlphaScore, CvReport, EpochRecord, LabeledExample, SupervisedLoss, TrainConfig, TrainHistory,
    ALPHA_GRID,
};
