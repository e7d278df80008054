//! Dense tensors, reverse-mode differentiation, graph attention, pooling,
//! SELU, hinge loss and AMSGrad.

pub mod ops;
mod optim;
mod tape;
mod tensor;

pub use ops::{
    attention_forward, fc_forward, gat_forward, global_mean_pool, hinge_loss, mean_pool_channels, selu, softmax,
    AttentionGraph, GatParams,
};
pub use optim::{Amsgrad, Moments};
pub use tape::{Gradients, Tape, Var};
pub use tensor::{matmul, Tensor};
