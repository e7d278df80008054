use std::collections::HashMap;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cv::{auc_of, cross_validate, mean_std, prepare, score, split};
use super::folds::{FoldPlan, Role};
use super::samples::{build_samples, sample_units, HarnessConfig};
use crate::classifier::train;
use crate::data::{Dataset, Timestamp, UrlId, SECONDS_PER_DAY};
use crate::error::{Error, Result};
use crate::exec::Executor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgingConfig {
    /// Share of URLs, oldest first, used for training and validation.
    pub past_fraction: f64,
    /// Share of the past URLs held out for validation.
    pub validation_fraction: f64,
    /// Window length as a share of the test items; at least 0.2.
    pub window_fraction: f64,
    /// Minimum distance between mean dates of consecutive windows.
    pub min_gap_days: f64,
    /// Diffusion windows of the two compared models.
    pub model_hours: Vec<f64>,
}

impl Default for AgingConfig {
    fn default() -> Self {
        Self {
            past_fraction: 0.8,
            validation_fraction: 0.25,
            window_fraction: 0.4,
            min_gap_days: 14.0,
            model_hours: vec![24.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    /// Index range into the time-sorted test items.
    pub start: usize,
    pub end: usize,
    pub mean_time: f64,
}

impl TimeWindow {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn iou(&self, other: &TimeWindow) -> f64 {
        let inter = self.end.min(other.end).saturating_sub(self.start.max(other.start));
        let union = self.len() + other.len() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

fn mean_time(times: &[Timestamp], r: Range<usize>) -> f64 {
    times[r.clone()].iter().map(|&t| t as f64).sum::<f64>() / r.len() as f64
}

/// Slides a window of `ceil(window_fraction · m)` items over `m`
/// time-sorted items. Each next window starts at the first position whose
/// mean time is at least `min_gap_days` after the previous window's.
pub fn make_windows(sorted_times: &[Timestamp], window_fraction: f64, min_gap_days: f64) -> Result<Vec<TimeWindow>> {
    let m = sorted_times.len();
    if m == 0 {
        return Err(Error::InvalidInput("no test items to window".into()));
    }
    if !(0.2..=1.0).contains(&window_fraction) {
        return Err(Error::InvalidInput("window_fraction must lie in [0.2, 1]".into()));
    }
    if sorted_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("test items are not time-sorted".into()));
    }
    let w = ((window_fraction * m as f64).ceil() as usize).clamp(1, m);
    let gap = min_gap_days * SECONDS_PER_DAY as f64;
    let mut windows = vec![TimeWindow {
        start: 0,
        end: w,
        mean_time: mean_time(sorted_times, 0..w),
    }];
    let mut s = 1;
    while s + w <= m {
        let mt = mean_time(sorted_times, s..s + w);
        if mt - windows[windows.len() - 1].mean_time >= gap {
            windows.push(TimeWindow {
                start: s,
                end: s + w,
                mean_time: mt,
            });
        }
        s += 1;
    }
    if w < m && windows.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "test span too short: no second window {min_gap_days} days after the first"
        )));
    }
    Ok(windows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingPlan {
    pub split_time: Timestamp,
    pub train: Vec<UrlId>,
    pub validation: Vec<UrlId>,
    pub test: Vec<UrlId>,
}

impl AgingPlan {
    /// Oldest `past_fraction` of URLs (by first appearance) for training and
    /// validation, the rest for testing.
    pub fn new(dataset: &Dataset, cfg: &AgingConfig, seed: u64) -> Result<Self> {
        if !(cfg.past_fraction > 0.0 && cfg.past_fraction < 1.0) {
            return Err(Error::InvalidInput("past_fraction must lie in (0, 1)".into()));
        }
        let mut urls: Vec<(Timestamp, UrlId)> = dataset.stories.iter().map(|s| (s.first_seen, s.url_id)).collect();
        urls.sort();
        let n_past = (cfg.past_fraction * urls.len() as f64).round() as usize;
        if n_past == 0 || n_past >= urls.len() {
            return Err(Error::InvalidInput(format!("{} URLs cannot be split in time", urls.len())));
        }
        let mut past: Vec<UrlId> = urls[..n_past].iter().map(|(_, u)| *u).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        past.shuffle(&mut rng);
        let n_val = (cfg.validation_fraction * past.len() as f64).round() as usize;
        let validation = past.split_off(past.len() - n_val.min(past.len() - 1));
        past.sort();
        let mut validation = validation;
        validation.sort();
        Ok(Self {
            split_time: urls[n_past].0,
            train: past,
            validation,
            test: urls[n_past..].iter().map(|(_, u)| *u).collect(),
        })
    }

    fn roles(&self) -> HashMap<UrlId, Role> {
        let mut out = HashMap::new();
        out.extend(self.train.iter().map(|&u| (u, Role::Train)));
        out.extend(self.validation.iter().map(|&u| (u, Role::Validation)));
        out.extend(self.test.iter().map(|&u| (u, Role::Test)));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingSeries {
    pub name: String,
    pub window_aucs: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingReport {
    pub plan: AgingPlan,
    pub windows: Vec<TimeWindow>,
    pub window_positives: Vec<usize>,
    pub mean_iou: f64,
    pub std_iou: f64,
    /// One series per model diffusion window, then the uniform-CV reference.
    pub series: Vec<AgingSeries>,
    pub cv_reference: f64,
}

/// Trains on the past and scores time windows of the future, once per
/// model diffusion window, next to a uniform cross-validation reference.
pub fn aging_protocol(dataset: &Dataset, cfg: &HarnessConfig, aging: &AgingConfig, exec: Executor) -> Result<AgingReport> {
    let plan = AgingPlan::new(dataset, aging, cfg.seed)?;
    let roles = plan.roles();

    // test items in time order; build_samples keeps sample_units' order
    let units = sample_units(dataset, cfg.scope, cfg.min_cascade_size);
    let times: Vec<Timestamp> = units
        .iter()
        .map(|u| u.iter().filter_map(|c| c.root_time()).min().unwrap_or(Timestamp::MAX))
        .collect();
    let mut test_order: Vec<usize> = (0..units.len())
        .filter(|&i| roles.get(&units[i][0].url_id) == Some(&Role::Test))
        .collect();
    test_order.sort_by_key(|&i| (times[i], i));
    let sorted_times: Vec<Timestamp> = test_order.iter().map(|&i| times[i]).collect();
    let windows = make_windows(&sorted_times, aging.window_fraction, aging.min_gap_days)?;
    let rank: HashMap<usize, usize> = test_order.iter().enumerate().map(|(r, &i)| (i, r)).collect();

    let ious: Vec<f64> = windows.windows(2).map(|w| w[0].iou(&w[1])).collect();
    let (mean_iou, std_iou) = mean_std(&ious);

    let mut series = exec.try_map(aging.model_hours.clone(), |hours| {
        let graphs = build_samples(dataset, cfg.scope, hours, cfg.min_cascade_size, &cfg.model.schema, Executor::Sequential)?;
        let prepared = prepare(&graphs, &cfg.model, &cfg.model.active_groups, Executor::Sequential)?;
        let s = split(&prepared, &roles);
        if s.train.is_empty() {
            return Err(Error::InvalidInput("no training samples before the split".into()));
        }
        let out = train(&s.train, &s.validation, &cfg.model)?;
        // `split` keeps sample order, so map test positions back to ranks
        let test_idx: Vec<usize> = (0..prepared.len())
            .filter(|&i| roles.get(&prepared[i].url_id) == Some(&Role::Test))
            .collect();
        let scores = score(&s.test, &out.params)?;
        let mut by_rank = vec![None; test_order.len()];
        for (sample, sc) in test_idx.iter().zip(scores) {
            by_rank[rank[sample]] = Some(sc);
        }
        let window_aucs = windows
            .iter()
            .map(|w| {
                let in_window: Vec<_> = by_rank[w.start..w.end].iter().flatten().cloned().collect();
                auc_of(&in_window)
            })
            .collect();
        Ok(AgingSeries {
            name: format!("diffusion_{hours}h"),
            window_aucs,
        })
    })?;

    let fold_plan = FoldPlan::from_stories(&dataset.stories, cfg.folds, cfg.seed)?;
    let cv_reference = cross_validate(dataset, cfg, &fold_plan, exec)?.mean_auc;
    series.push(AgingSeries {
        name: "uniform_cv".into(),
        window_aucs: vec![Some(cv_reference); windows.len()],
    });

    let window_positives = windows
        .iter()
        .map(|w| {
            test_order[w.start..w.end]
                .iter()
                .filter(|&&i| dataset.story(units[i][0].url_id).is_some_and(|s| s.label.is_fake()))
                .count()
        })
        .collect();

    Ok(AgingReport {
        plan,
        windows,
        window_positives,
        mean_iou,
        std_iou,
        series,
        cv_reference,
    })
}
