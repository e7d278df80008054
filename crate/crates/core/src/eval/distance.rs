//! User overlap between samples, measured as hop distances on the follow
//! graph taken as undirected.
//!
//! The distance of user `u` in sample `t` is the hop count to the nearest
//! user who appears in any other sample (0 if `u` itself does). MAD is the
//! mean over samples of the per-sample mean distance, MMD the mean over
//! samples of the per-sample minimum. Users with no path get a cap of
//! one more than a double-sweep estimate of the graph diameter.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::cv::mean_std;
use crate::data::{SocialGraph, UserId};
use crate::error::{Error, Result};
use crate::exec::Executor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapDistances {
    pub mad_mean: f64,
    pub mad_std: f64,
    pub mmd_mean: f64,
    pub mmd_std: f64,
    pub cap: u32,
    pub samples: usize,
    pub skipped: usize,
}

const UNSEEN: u32 = u32::MAX;

fn neighbours(g: &SocialGraph, u: usize) -> impl Iterator<Item = usize> + '_ {
    g.following_of(u).iter().chain(g.followers_of(u)).map(|&v| v as usize)
}

/// Undirected hop distances from every source at once.
pub fn multi_source_bfs(g: &SocialGraph, sources: impl IntoIterator<Item = usize>) -> Vec<u32> {
    let mut dist = vec![UNSEEN; g.num_users()];
    let mut queue = VecDeque::new();
    for s in sources {
        if dist[s] == UNSEEN {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for v in neighbours(g, u) {
            if dist[v] == UNSEEN {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Lower bound on the diameter from two breadth-first sweeps.
pub fn diameter_estimate(g: &SocialGraph) -> u32 {
    if g.num_users() == 0 {
        return 0;
    }
    let farthest = |d: &[u32]| {
        d.iter()
            .enumerate()
            .filter(|(_, &x)| x != UNSEEN)
            .max_by_key(|(i, &x)| (x, std::cmp::Reverse(*i)))
            .map(|(i, &x)| (i, x))
            .unwrap_or((0, 0))
    };
    let (far, _) = farthest(&multi_source_bfs(g, [0]));
    farthest(&multi_source_bfs(g, [far])).1
}

pub fn mad_mmd(samples: &[Vec<UserId>], social: &SocialGraph, exec: Executor) -> Result<OverlapDistances> {
    let mut indexed: Vec<Vec<usize>> = Vec::with_capacity(samples.len());
    let mut skipped = 0;
    for (t, s) in samples.iter().enumerate() {
        let mut users = s
            .iter()
            .map(|u| social.index_of(*u).ok_or(Error::UnknownUser(u.0)))
            .collect::<Result<Vec<_>>>()?;
        users.sort_unstable();
        users.dedup();
        if users.is_empty() {
            log::warn!("sample {t} has no users; skipped");
            skipped += 1;
        } else {
            indexed.push(users);
        }
    }
    if indexed.len() < 2 {
        return Err(Error::InvalidInput("need at least two non-empty samples".into()));
    }

    let mut membership: HashMap<usize, usize> = HashMap::new();
    for s in &indexed {
        for &u in s {
            *membership.entry(u).or_insert(0) += 1;
        }
    }
    let cap = diameter_estimate(social) + 1;
    let per_sample = exec.map((0..indexed.len()).collect(), |t| {
        let own = &indexed[t];
        let sources = membership
            .iter()
            .filter(|(u, &count)| count > usize::from(own.binary_search(u).is_ok()))
            .map(|(&u, _)| u);
        let dist = multi_source_bfs(social, sources);
        let d: Vec<f64> = own
            .iter()
            .map(|&u| f64::from(if dist[u] == UNSEEN { cap } else { dist[u] }))
            .collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        (mean, min)
    });
    let (mad_mean, mad_std) = mean_std(&per_sample.iter().map(|p| p.0).collect::<Vec<_>>());
    let (mmd_mean, mmd_std) = mean_std(&per_sample.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(OverlapDistances {
        mad_mean,
        mad_std,
        mmd_mean,
        mmd_std,
        cap,
        samples: indexed.len(),
        skipped,
    })
}
