use serde::{Deserialize, Serialize};

use crate::classifier::ModelConfig;
use crate::data::{
    build_propagation_graph, truncate_cascade, truncate_story, CascadeRecord, Dataset, FeatureSchema, PropagationGraph,
    Scope,
};
use crate::error::Result;
use crate::exec::Executor;

pub const DEFAULT_MIN_CASCADE_SIZE: usize = 6;
pub const FULL_DAY_HOURS: f64 = 24.0;

/// Settings shared by every protocol in the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub scope: Scope,
    /// Diffusion window after a sample's first tweet.
    pub hours: f64,
    /// Cascade-wise samples smaller than this (before truncation) are
    /// dropped. Ignored url-wise.
    pub min_cascade_size: usize,
    pub folds: usize,
    /// Seed of the fold shuffle; the model has its own in `model.seed`.
    pub seed: u64,
    pub model: ModelConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self::for_scope(Scope::UrlWise)
    }
}

impl HarnessConfig {
    pub fn for_scope(scope: Scope) -> Self {
        Self {
            scope,
            hours: FULL_DAY_HOURS,
            min_cascade_size: DEFAULT_MIN_CASCADE_SIZE,
            folds: 5,
            seed: 42,
            model: ModelConfig::for_scope(scope),
        }
    }
}

pub fn filter_min_cascade_size<'a>(
    cascades: impl IntoIterator<Item = &'a CascadeRecord>,
    min_tweets: usize,
) -> Vec<&'a CascadeRecord> {
    cascades.into_iter().filter(|c| c.len() >= min_tweets).collect()
}

/// The cascades that make up each sample, untruncated, in a fixed order:
/// stories in dataset order, and cascade-wise each story's cascades in
/// their listed order.
pub fn sample_units(dataset: &Dataset, scope: Scope, min_cascade_size: usize) -> Vec<Vec<&CascadeRecord>> {
    let by_story = dataset.cascades_by_story();
    match scope {
        Scope::UrlWise => by_story.into_iter().filter(|g| g.iter().any(|c| !c.is_empty())).collect(),
        Scope::CascadeWise => by_story
            .into_iter()
            .flat_map(|g| filter_min_cascade_size(g, min_cascade_size.max(1)))
            .map(|c| vec![c])
            .collect(),
    }
}

fn truncate_unit(unit: &[&CascadeRecord], scope: Scope, hours: f64) -> Vec<CascadeRecord> {
    match scope {
        Scope::UrlWise => truncate_story(unit, hours),
        Scope::CascadeWise => vec![truncate_cascade(unit[0], hours)],
    }
}

/// Propagation graphs of every sample in scope, truncated to `hours`.
pub fn build_samples(
    dataset: &Dataset,
    scope: Scope,
    hours: f64,
    min_cascade_size: usize,
    schema: &FeatureSchema,
    exec: Executor,
) -> Result<Vec<PropagationGraph>> {
    let units = sample_units(dataset, scope, min_cascade_size);
    exec.try_map(units, |unit| {
        let story = dataset
            .story(unit[0].url_id)
            .ok_or_else(|| crate::Error::InvalidInput(format!("cascade of unknown url {}", unit[0].url_id)))?;
        let kept = truncate_unit(&unit, scope, hours);
        let refs: Vec<&CascadeRecord> = kept.iter().collect();
        let mut g = build_propagation_graph(story, &refs, &dataset.social, scope, schema)?;
        g.diffusion_window_hours = Some(hours);
        Ok(g)
    })
}

/// Mean over samples of (tweets within `hours`) / (tweets within 24 h).
pub fn coverage(dataset: &Dataset, scope: Scope, min_cascade_size: usize, hours: f64) -> f64 {
    let units = sample_units(dataset, scope, min_cascade_size);
    let count = |unit: &[&CascadeRecord], h: f64| truncate_unit(unit, scope, h).iter().map(|c| c.len()).sum::<usize>();
    let ratios: Vec<f64> = units
        .iter()
        .filter_map(|u| {
            let day = count(u, FULL_DAY_HOURS);
            (day > 0).then(|| count(u, hours.min(FULL_DAY_HOURS)) as f64 / day as f64)
        })
        .collect();
    if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::cascade;

    #[test]
    fn threshold_one_is_identity() {
        let cs = vec![cascade(0, 0, 0, &[1]), cascade(1, 0, 10, &[1, 2, 3])];
        assert_eq!(filter_min_cascade_size(&cs, 1).len(), 2);
        assert_eq!(filter_min_cascade_size(&cs, 3).len(), 1);
        assert_eq!(filter_min_cascade_size(&cs, 4).len(), 0);
    }
}
