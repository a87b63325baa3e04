//! Multi-branch feedforward classifier: one small network per feature
//! block, concatenated into a shared trunk with a softmax output. Variants
//! range from multinomial logistic regression to a residual two-layer
//! branch design.

mod data;
mod grid;
mod network;
mod train;

pub use data::{FeatureSet, Scaler};
pub use grid::{grid_search, GridResult, GridRow, GridSpec};
pub use network::{
    backward, check_inputs, forward, output_delta, predict_topk, softmax_rows, weighted_loss, BranchSpec, Forward,
    Layer, NetworkParams, NetworkSpec, Variant, DEFAULT_BRANCH_HIDDEN, DEFAULT_TRUNK, N_CLASSES,
};
pub use train::{
    inverse_frequency_weights, loss_curve_tsv, train, EpochLoss, Model, TrainConfig, Trained, MODEL_FORMAT_VERSION,
};
