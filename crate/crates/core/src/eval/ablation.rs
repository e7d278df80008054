use serde::{Deserialize, Serialize};

use super::cv::{auc_of, prepare, round_model, score, split};
use super::folds::FoldPlan;
use super::samples::{build_samples, HarnessConfig};
use crate::classifier::{evaluate, train, ModelConfig};
use crate::data::{Dataset, FeatureGroup, PropagationGraph};
use crate::error::{Error, Result};
use crate::exec::Executor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationLevel {
    pub groups: Vec<FeatureGroup>,
    pub validation_auc: Option<f64>,
    pub test_auc: Option<f64>,
    /// Group dropped to reach the next level.
    pub removed: Option<FeatureGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    /// From all groups down to one.
    pub levels: Vec<AblationLevel>,
    /// Most important first: the reverse of the removal order.
    pub importance: Vec<FeatureGroup>,
}

struct Run {
    validation_auc: Option<f64>,
    test_auc: Option<f64>,
}

fn run(graphs: &[PropagationGraph], plan: &FoldPlan, model: &ModelConfig, groups: &[FeatureGroup]) -> Result<Run> {
    let prepared = prepare(graphs, model, groups, Executor::Sequential)?;
    let s = split(&prepared, &plan.roles(0));
    let cfg = ModelConfig {
        active_groups: groups.to_vec(),
        ..round_model(model, 0)
    };
    let out = train(&s.train, &s.validation, &cfg)?;
    let (validation_auc, _) = evaluate(&s.validation, &out.params)?;
    Ok(Run {
        validation_auc,
        test_auc: auc_of(&score(&s.test, &out.params)?),
    })
}

/// Backward feature selection on round 0 of `plan`: starting from every
/// group, repeatedly drop the group whose removal leaves the highest
/// validation AUC. Ties go to the group listed first in
/// [`FeatureGroup::ALL`].
pub fn backward_feature_selection(
    dataset: &Dataset,
    cfg: &HarnessConfig,
    plan: &FoldPlan,
    exec: Executor,
) -> Result<AblationReport> {
    let graphs = build_samples(dataset, cfg.scope, cfg.hours, cfg.min_cascade_size, &cfg.model.schema, exec)?;
    if graphs.is_empty() {
        return Err(Error::InvalidInput("no samples in scope".into()));
    }
    let mut active: Vec<FeatureGroup> = FeatureGroup::ALL.to_vec();
    let first = run(&graphs, plan, &cfg.model, &active)?;
    let mut levels = vec![AblationLevel {
        groups: active.clone(),
        validation_auc: first.validation_auc,
        test_auc: first.test_auc,
        removed: None,
    }];
    let mut removal_order = Vec::new();
    while active.len() > 1 {
        let candidates: Vec<Vec<FeatureGroup>> = active
            .iter()
            .map(|g| active.iter().copied().filter(|x| x != g).collect())
            .collect();
        let runs = exec.try_map(candidates.clone(), |groups| run(&graphs, plan, &cfg.model, &groups))?;
        let key = |r: &Run| r.validation_auc.unwrap_or(f64::NEG_INFINITY);
        let mut best = 0;
        for (i, r) in runs.iter().enumerate().skip(1) {
            if key(r) > key(&runs[best]) {
                best = i;
            }
        }
        let removed = active[best];
        log::info!("ablation: dropping {}", removed.name());
        removal_order.push(removed);
        levels.last_mut().expect("non-empty").removed = Some(removed);
        active = candidates[best].clone();
        levels.push(AblationLevel {
            groups: active.clone(),
            validation_auc: runs[best].validation_auc,
            test_auc: runs[best].test_auc,
            removed: None,
        });
    }
    let mut importance = active.clone();
    importance.extend(removal_order.iter().rev());
    Ok(AblationReport { levels, importance })
}
