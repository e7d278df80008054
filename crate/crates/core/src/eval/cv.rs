use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::folds::{FoldPlan, Role};
use super::roc::{roc_auc, RocCurve};
use super::samples::{build_samples, coverage, HarnessConfig};
use crate::classifier::{forward, train, ModelConfig, PreparedGraph};
use crate::data::{Dataset, FeatureGroup, Label, PropagationGraph, Scope, UrlId};
use crate::error::{Error, Result};
use crate::exec::Executor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub url_id: UrlId,
    pub label: Label,
    /// `s_fake − s_true`; larger means more likely fake.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub round: usize,
    /// `None` if the test fold holds a single class.
    pub auc: Option<f64>,
    pub best_iteration: usize,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub scores: Vec<ScoredSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub scope: Scope,
    pub hours: f64,
    pub num_samples: usize,
    pub folds: Vec<FoldResult>,
    pub mean_auc: f64,
    pub std_auc: f64,
    /// ROC of all test scores pooled over folds.
    pub pooled_roc: Option<RocCurve>,
}

/// Mean and sample standard deviation; `(NaN, NaN)` for no values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    match values.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (values[0], 0.0),
        n => {
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (mean, var.sqrt())
        }
    }
}

/// Prepares graphs for the network under `groups`.
pub fn prepare(
    graphs: &[PropagationGraph],
    model: &ModelConfig,
    groups: &[FeatureGroup],
    exec: Executor,
) -> Result<Vec<PreparedGraph>> {
    exec.try_map(graphs.iter().collect(), |g| PreparedGraph::new(g, groups, &model.schema))
}

pub(crate) struct Split<'a> {
    pub train: Vec<PreparedGraph>,
    pub validation: Vec<PreparedGraph>,
    pub test: Vec<&'a PreparedGraph>,
}

pub(crate) fn split<'a>(graphs: &'a [PreparedGraph], roles: &HashMap<UrlId, Role>) -> Split<'a> {
    let mut s = Split {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for g in graphs {
        match roles.get(&g.url_id) {
            Some(Role::Train) => s.train.push(g.clone()),
            Some(Role::Validation) => s.validation.push(g.clone()),
            Some(Role::Test) => s.test.push(g),
            None => {}
        }
    }
    s
}

pub(crate) fn score(graphs: &[&PreparedGraph], model: &crate::classifier::ModelParams) -> Result<Vec<ScoredSample>> {
    graphs
        .iter()
        .map(|g| {
            let p = forward(g, model)?;
            Ok(ScoredSample {
                url_id: g.url_id,
                label: g.label,
                score: p.fake_margin(),
            })
        })
        .collect()
}

pub(crate) fn auc_of(scores: &[ScoredSample]) -> Option<f64> {
    let s: Vec<f64> = scores.iter().map(|x| x.score).collect();
    let l: Vec<bool> = scores.iter().map(|x| x.label.is_fake()).collect();
    roc_auc(&s, &l).ok().map(|r| r.auc)
}

/// Model settings for round `r`: a distinct initialisation per round.
pub(crate) fn round_model(model: &ModelConfig, r: usize) -> ModelConfig {
    ModelConfig {
        seed: model.seed.wrapping_add(r as u64),
        ..model.clone()
    }
}

fn run_round(graphs: &[PreparedGraph], plan: &FoldPlan, model: &ModelConfig, r: usize) -> Result<FoldResult> {
    let s = split(graphs, &plan.roles(r));
    if s.train.is_empty() {
        return Err(Error::InvalidInput(format!("round {r} has no training samples")));
    }
    let out = train(&s.train, &s.validation, &round_model(model, r))?;
    let scores = score(&s.test, &out.params)?;
    Ok(FoldResult {
        round: r,
        auc: auc_of(&scores),
        best_iteration: out.best_iteration,
        train_size: s.train.len(),
        validation_size: s.validation.len(),
        test_size: s.test.len(),
        scores,
    })
}

fn summarise(scope: Scope, hours: f64, num_samples: usize, folds: Vec<FoldResult>) -> CvReport {
    let aucs: Vec<f64> = folds.iter().filter_map(|f| f.auc).collect();
    let (mean_auc, std_auc) = mean_std(&aucs);
    let pooled: Vec<ScoredSample> = folds.iter().flat_map(|f| f.scores.iter().cloned()).collect();
    let s: Vec<f64> = pooled.iter().map(|x| x.score).collect();
    let l: Vec<bool> = pooled.iter().map(|x| x.label.is_fake()).collect();
    CvReport {
        scope,
        hours,
        num_samples,
        folds,
        mean_auc,
        std_auc,
        pooled_roc: roc_auc(&s, &l).ok(),
    }
}

/// All rounds of `plan` on already-built samples.
pub fn cross_validate_graphs(
    graphs: &[PropagationGraph],
    cfg: &HarnessConfig,
    plan: &FoldPlan,
    exec: Executor,
) -> Result<CvReport> {
    cfg.model.validate()?;
    let prepared = prepare(graphs, &cfg.model, &cfg.model.active_groups, exec)?;
    let folds = exec.try_map((0..plan.k).collect(), |r| run_round(&prepared, plan, &cfg.model, r))?;
    Ok(summarise(cfg.scope, cfg.hours, graphs.len(), folds))
}

/// Grouped k-fold cross-validation: samples inherit their URL's fold.
pub fn cross_validate(dataset: &Dataset, cfg: &HarnessConfig, plan: &FoldPlan, exec: Executor) -> Result<CvReport> {
    let graphs = build_samples(dataset, cfg.scope, cfg.hours, cfg.min_cascade_size, &cfg.model.schema, exec)?;
    if graphs.is_empty() {
        return Err(Error::InvalidInput("no samples in scope".into()));
    }
    cross_validate_graphs(&graphs, cfg, plan, exec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub hours: f64,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub fold_aucs: Vec<Option<f64>>,
    /// Mean fraction of a sample's 24-hour tweets kept at this window.
    pub coverage: f64,
    pub num_samples: usize,
}

/// A fresh cross-validation per diffusion window, all sharing `plan`.
pub fn diffusion_sweep(
    dataset: &Dataset,
    cfg: &HarnessConfig,
    plan: &FoldPlan,
    hours: &[f64],
    exec: Executor,
) -> Result<Vec<SweepPoint>> {
    hours
        .iter()
        .map(|&h| {
            let at = HarnessConfig { hours: h, ..cfg.clone() };
            let report = cross_validate(dataset, &at, plan, exec)?;
            log::info!("sweep {h} h: mean AUC {:.4}", report.mean_auc);
            Ok(SweepPoint {
                hours: h,
                mean_auc: report.mean_auc,
                std_auc: report.std_auc,
                fold_aucs: report.folds.iter().map(|f| f.auc).collect(),
                coverage: coverage(dataset, cfg.scope, cfg.min_cascade_size, h),
                num_samples: report.num_samples,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_basics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert!(mean_std(&[]).0.is_nan());
    }
}
