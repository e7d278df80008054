use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Label, UrlId, UrlStory};
use crate::error::{Error, Result};

/// `k` disjoint URL folds. Round `r` tests on fold `r`, validates on fold
/// `r + 1 (mod k)` and trains on the rest, so every URL is tested exactly
/// once. Cascade-wise samples follow their URL's fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<UrlId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRound {
    pub train: Vec<UrlId>,
    pub validation: Vec<UrlId>,
    pub test: Vec<UrlId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldBalance {
    pub size: usize,
    pub fake: usize,
    pub fake_fraction: f64,
}

impl FoldPlan {
    /// Shuffles each label's URLs with `seed` and deals them round-robin,
    /// so folds differ in size by at most one and carry matching label
    /// proportions.
    pub fn new(urls: &[(UrlId, Label)], k: usize, seed: u64) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidInput(format!("need at least 3 folds, got {k}")));
        }
        if urls.len() < k {
            return Err(Error::InvalidInput(format!("{} URLs cannot fill {k} folds", urls.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut folds = vec![Vec::new(); k];
        let mut next = 0;
        for label in [Label::FakeNews, Label::TrueNews] {
            let mut ids: Vec<UrlId> = urls.iter().filter(|(_, l)| *l == label).map(|(u, _)| *u).collect();
            ids.sort();
            ids.shuffle(&mut rng);
            for id in ids {
                folds[next % k].push(id);
                next += 1;
            }
        }
        Ok(Self { k, seed, folds })
    }

    pub fn from_stories(stories: &[UrlStory], k: usize, seed: u64) -> Result<Self> {
        let urls: Vec<(UrlId, Label)> = stories.iter().map(|s| (s.url_id, s.label)).collect();
        Self::new(&urls, k, seed)
    }

    pub fn round(&self, r: usize) -> FoldRound {
        let (test_fold, val_fold) = (r % self.k, (r + 1) % self.k);
        let mut round = FoldRound {
            train: Vec::new(),
            validation: self.folds[val_fold].clone(),
            test: self.folds[test_fold].clone(),
        };
        for (f, ids) in self.folds.iter().enumerate() {
            if f != test_fold && f != val_fold {
                round.train.extend_from_slice(ids);
            }
        }
        round
    }

    /// Role of every URL in round `r`.
    pub fn roles(&self, r: usize) -> HashMap<UrlId, Role> {
        let round = self.round(r);
        let mut out = HashMap::new();
        for (ids, role) in [(round.train, Role::Train), (round.validation, Role::Validation), (round.test, Role::Test)] {
            out.extend(ids.into_iter().map(|u| (u, role)));
        }
        out
    }

    pub fn balance(&self, labels: &HashMap<UrlId, Label>) -> Vec<FoldBalance> {
        self.folds
            .iter()
            .map(|f| {
                let fake = f.iter().filter(|u| labels.get(u).is_some_and(|l| l.is_fake())).count();
                FoldBalance {
                    size: f.len(),
                    fake,
                    fake_fraction: if f.is_empty() { 0.0 } else { fake as f64 / f.len() as f64 },
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn urls(n: usize, fakes: usize) -> Vec<(UrlId, Label)> {
        (0..n)
            .map(|i| (UrlId(i as u64), if i < fakes { Label::FakeNews } else { Label::TrueNews }))
            .collect()
    }

    #[test]
    fn paper_split_sizes() {
        let plan = FoldPlan::new(&urls(1129, 189), 5, 7).unwrap();
        for r in 0..5 {
            let round = plan.round(r);
            assert!((677..=678).contains(&round.train.len()), "{}", round.train.len());
            assert!((225..=226).contains(&round.validation.len()));
            assert!((225..=226).contains(&round.test.len()));
        }
    }

    #[test]
    fn every_url_tested_once() {
        let plan = FoldPlan::new(&urls(53, 9), 5, 1).unwrap();
        let mut tested: Vec<UrlId> = (0..5).flat_map(|r| plan.round(r).test).collect();
        tested.sort();
        assert_eq!(tested, (0..53).map(UrlId).collect::<Vec<_>>());
        for r in 0..5 {
            assert_eq!(plan.roles(r).len(), 53);
        }
    }

    #[test]
    fn stratified_and_deterministic() {
        let data = urls(300, 50);
        let plan = FoldPlan::new(&data, 5, 3).unwrap();
        assert_eq!(plan, FoldPlan::new(&data, 5, 3).unwrap());
        let labels: HashMap<UrlId, Label> = data.into_iter().collect();
        for b in plan.balance(&labels) {
            assert_eq!(b.size, 60);
            assert_eq!(b.fake, 10);
        }
    }

    #[test]
    fn too_few_urls() {
        assert!(FoldPlan::new(&urls(4, 1), 5, 0).is_err());
    }
}
