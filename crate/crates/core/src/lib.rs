//! Fake-news detection from propagation patterns with graph attention
//! networks, plus a synthetic corpus generator and evaluation harness.

pub mod classifier;
pub mod data;
pub mod error;
pub mod eval;
pub mod exec;
pub mod nn;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Executor;
