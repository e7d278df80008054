use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{CascadeRecord, Dataset, SECONDS_PER_HOUR};
use crate::error::{Error, Result};

/// Corpus summary for comparison with the reference dataset statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub num_users: usize,
    pub num_follows: usize,
    pub num_urls: usize,
    pub num_cascades: usize,
    pub num_tweets: usize,
    pub fake_urls: usize,
    pub fake_fraction: f64,
    pub follows_per_user: f64,
    pub mean_cascade_size: f64,
    /// Cascade size → number of cascades.
    pub cascade_size_histogram: BTreeMap<usize, usize>,
    /// Cascades per URL → number of URLs.
    pub cascades_per_url_histogram: BTreeMap<usize, usize>,
    /// Entry `r` is the share of all cascades held by the `r + 1` URLs
    /// with the most cascades.
    pub cumulative_cascade_share: Vec<f64>,
    /// Entry `h` is the mean over cascades of
    /// (tweets within `h` hours of the source) / (tweets within 24 hours).
    pub coverage_cascade: Vec<f64>,
    /// As `coverage_cascade`, per URL, measured from the URL's first tweet.
    pub coverage_url: Vec<f64>,
}

impl SummaryStats {
    /// Cumulative cascade share at 1-based `rank`, saturating at 1.
    pub fn share_at_rank(&self, rank: usize) -> f64 {
        match rank {
            0 => 0.0,
            r => self.cumulative_cascade_share.get(r - 1).copied().unwrap_or(1.0),
        }
    }
}

pub const COVERAGE_HOURS: usize = 24;

fn coverage(timestamps: &mut [i64], out: &mut [f64]) {
    timestamps.sort_unstable();
    let Some(&start) = timestamps.first() else { return };
    let within = |h: usize| {
        let limit = start + (h as f64 * SECONDS_PER_HOUR) as i64;
        timestamps.partition_point(|&t| t <= limit)
    };
    let day = within(COVERAGE_HOURS) as f64;
    for (h, o) in out.iter_mut().enumerate() {
        *o += within(h) as f64 / day;
    }
}

pub fn summary_stats(dataset: &Dataset) -> Result<SummaryStats> {
    let cascades: Vec<&CascadeRecord> = dataset.cascades.iter().filter(|c| !c.is_empty()).collect();
    if dataset.stories.is_empty() || cascades.is_empty() {
        return Err(Error::InvalidInput("dataset has no stories or no tweets".into()));
    }
    let mut size_hist = BTreeMap::new();
    let mut cov_c = vec![0.0; COVERAGE_HOURS + 1];
    let mut stamps = Vec::new();
    for c in &cascades {
        *size_hist.entry(c.len()).or_insert(0) += 1;
        stamps.clear();
        stamps.extend(c.tweets.iter().map(|t| t.timestamp));
        coverage(&mut stamps, &mut cov_c);
    }
    cov_c.iter_mut().for_each(|x| *x /= cascades.len() as f64);

    let by_story = dataset.cascades_by_story();
    let mut per_url_hist = BTreeMap::new();
    let mut counts: Vec<usize> = Vec::with_capacity(by_story.len());
    let mut cov_u = vec![0.0; COVERAGE_HOURS + 1];
    let mut urls_with_tweets = 0;
    for group in &by_story {
        *per_url_hist.entry(group.len()).or_insert(0) += 1;
        counts.push(group.len());
        stamps.clear();
        stamps.extend(group.iter().flat_map(|c| c.tweets.iter().map(|t| t.timestamp)));
        if !stamps.is_empty() {
            urls_with_tweets += 1;
            coverage(&mut stamps, &mut cov_u);
        }
    }
    cov_u.iter_mut().for_each(|x| *x /= urls_with_tweets as f64);

    counts.sort_unstable_by(|a, b| b.cmp(a));
    let total: usize = counts.iter().sum();
    let mut acc = 0;
    let cumulative = counts
        .iter()
        .map(|&n| {
            acc += n;
            if total == 0 {
                0.0
            } else {
                acc as f64 / total as f64
            }
        })
        .collect();

    let num_tweets: usize = cascades.iter().map(|c| c.len()).sum();
    let fake_urls = dataset.stories.iter().filter(|s| s.label.is_fake()).count();
    let num_users = dataset.social.num_users();
    Ok(SummaryStats {
        num_users,
        num_follows: dataset.social.num_follows(),
        num_urls: dataset.stories.len(),
        num_cascades: cascades.len(),
        num_tweets,
        fake_urls,
        fake_fraction: fake_urls as f64 / dataset.stories.len() as f64,
        follows_per_user: dataset.social.num_follows() as f64 / num_users.max(1) as f64,
        mean_cascade_size: num_tweets as f64 / cascades.len() as f64,
        cascade_size_histogram: size_hist,
        cascades_per_url_histogram: per_url_hist,
        cumulative_cascade_share: cumulative,
        coverage_cascade: cov_c,
        coverage_url: cov_u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::{cascade, user};
    use crate::data::{CascadeId, Label, SocialGraph, UrlId, UrlStory};

    fn dataset(cascades: Vec<CascadeRecord>, stories: Vec<UrlStory>) -> Dataset {
        let users = (0..10).map(|i| user(i, 1)).collect();
        Dataset {
            social: SocialGraph::new(users, []).unwrap(),
            stories,
            cascades,
        }
    }

    fn story(url: u64, ids: &[u64]) -> UrlStory {
        UrlStory {
            url_id: UrlId(url),
            label: Label::TrueNews,
            first_seen: 0,
            cascade_ids: ids.iter().map(|&i| CascadeId(i)).collect(),
        }
    }

    #[test]
    fn single_tweet_histogram() {
        let d = dataset(vec![cascade(0, 0, 0, &[1])], vec![story(0, &[0])]);
        let s = summary_stats(&d).unwrap();
        assert_eq!(s.cascade_size_histogram, BTreeMap::from([(1, 1)]));
        assert_eq!(s.coverage_cascade[0], 1.0);
    }

    #[test]
    fn cumulative_share_at_rank_15() {
        // 15 URLs with 4 cascades each hold 60 of 300 cascades; 240 URLs hold one each.
        let mut cascades = Vec::new();
        let mut stories = Vec::new();
        let mut next = 0u64;
        for url in 0..255u64 {
            let n = if url < 15 { 4 } else { 1 };
            let ids: Vec<u64> = (next..next + n).collect();
            for &id in &ids {
                cascades.push(cascade(id, url, id * 10, &[1]));
            }
            next += n;
            stories.push(story(url, &ids));
        }
        let s = summary_stats(&dataset(cascades, stories)).unwrap();
        assert!((s.share_at_rank(15) - 0.20).abs() < 1e-12);
        assert_eq!(s.share_at_rank(255), 1.0);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        assert!(summary_stats(&dataset(vec![], vec![])).is_err());
    }
}
