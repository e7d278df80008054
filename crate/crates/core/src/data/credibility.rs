use std::collections::{HashMap, HashSet};

use super::types::{CascadeRecord, Label, UrlId, UrlStory, UserId};
use crate::error::{Error, Result};

/// `(true - fake) / (true + fake)`; positive means reliable.
pub fn credibility_from_counts(true_count: usize, fake_count: usize) -> Result<f64> {
    let total = true_count + fake_count;
    if total == 0 {
        return Err(Error::InvalidInput("no labelled participation".into()));
    }
    Ok((true_count as f64 - fake_count as f64) / total as f64)
}

/// Per-user sets of distinct labelled stories the user (re)tweeted.
#[derive(Debug, Clone, Default)]
pub struct CredibilityIndex {
    counts: HashMap<UserId, (usize, usize)>,
}

impl CredibilityIndex {
    pub fn build(stories: &[UrlStory], cascades: &[CascadeRecord]) -> Self {
        let labels: HashMap<UrlId, Label> = stories.iter().map(|s| (s.url_id, s.label)).collect();
        let mut seen: HashSet<(UserId, UrlId)> = HashSet::new();
        let mut counts: HashMap<UserId, (usize, usize)> = HashMap::new();
        for c in cascades {
            let Some(&label) = labels.get(&c.url_id) else { continue };
            for t in &c.tweets {
                if seen.insert((t.author, c.url_id)) {
                    let e = counts.entry(t.author).or_default();
                    match label {
                        Label::TrueNews => e.0 += 1,
                        Label::FakeNews => e.1 += 1,
                    }
                }
            }
        }
        Self { counts }
    }

    /// Errors for users with no labelled participation.
    pub fn score(&self, user: UserId) -> Result<f64> {
        let (t, f) = self.counts.get(&user).copied().unwrap_or_default();
        credibility_from_counts(t, f).map_err(|_| Error::InvalidInput(format!("user {user} shared no labelled story")))
    }

    pub fn get(&self, user: UserId) -> Option<f64> {
        self.score(user).ok()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}
