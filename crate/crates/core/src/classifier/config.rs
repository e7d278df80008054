use serde::{Deserialize, Serialize};

use crate::data::{FeatureGroup, FeatureSchema, Scope};
use crate::error::{Error, Result};

pub const URL_WISE_ITERATIONS: usize = 25_000;
pub const CASCADE_WISE_ITERATIONS: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub schema: FeatureSchema,
    /// Output width of both graph convolutions.
    pub hidden: usize,
    pub fc1: usize,
    /// Channel window of the first mean pooling (hidden → hidden / window).
    pub pool_window: usize,
    pub lr: f64,
    pub iterations: usize,
    /// Validation AUC is tracked every this many iterations.
    pub eval_every: usize,
    pub seed: u64,
    pub active_groups: Vec<FeatureGroup>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            schema: FeatureSchema::standard(),
            hidden: 64,
            fc1: 32,
            pool_window: 2,
            lr: 5e-4,
            iterations: URL_WISE_ITERATIONS,
            eval_every: 500,
            seed: 42,
            active_groups: FeatureGroup::ALL.to_vec(),
        }
    }
}

impl ModelConfig {
    /// Url-wise models see every group; cascade-wise models drop content.
    pub fn for_scope(scope: Scope) -> Self {
        match scope {
            Scope::UrlWise => Self::default(),
            Scope::CascadeWise => Self {
                iterations: CASCADE_WISE_ITERATIONS,
                active_groups: default_groups(scope),
                ..Self::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.active_groups.is_empty() {
            return Err(Error::InvalidInput("no active feature groups".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidInput("iterations must be positive".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidInput("eval_every must be positive".into()));
        }
        if self.pool_window == 0 || self.hidden % self.pool_window != 0 {
            return Err(Error::InvalidInput("hidden width not divisible by pooling window".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidInput("learning rate must be positive".into()));
        }
        self.schema.validate()
    }
}

pub fn default_groups(scope: Scope) -> Vec<FeatureGroup> {
    match scope {
        Scope::UrlWise => FeatureGroup::ALL.to_vec(),
        Scope::CascadeWise => FeatureGroup::ALL
            .into_iter()
            .filter(|g| *g != FeatureGroup::Content)
            .collect(),
    }
}
