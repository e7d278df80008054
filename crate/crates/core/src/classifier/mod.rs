//! The graph-attention classifier: network assembly, feature masks,
//! training, checkpoints and embedding export.

mod checkpoint;
mod config;
mod export;
mod network;
mod train;

pub use checkpoint::{Checkpoint, NamedArray};
pub use config::{default_groups, ModelConfig, CASCADE_WISE_ITERATIONS, URL_WISE_ITERATIONS};
pub use export::{embeddings_table, user_embeddings, UserEmbedding};
pub use network::{
    apply_feature_mask, forward, hinge_on, loss_and_gradients, ModelParams, Prediction, PreparedGraph, PARAM_NAMES,
};
pub use train::{evaluate, train, TrainOutcome, ValidationPoint};

