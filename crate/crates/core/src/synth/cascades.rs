use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric, LogNormal};

use super::config::GenConfig;
use super::social::{generate_social_graph, Community, SyntheticSocial};
use crate::data::{
    CascadeId, CascadeRecord, Dataset, Label, Tweet, TweetId, UrlId, UrlStory, EMBEDDING_DIM, SECONDS_PER_DAY,
};
use crate::error::Result;
use crate::exec::Executor;

const URL_STREAM_BASE: u64 = 1_000;

/// Discrete power law `P(k) ∝ k^-exponent` on `1..=max`, sampled by
/// inverting the cumulative table.
#[derive(Debug, Clone)]
pub struct SizeLaw {
    cdf: Vec<f64>,
}

impl SizeLaw {
    pub fn new(exponent: f64, max: usize) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (1..=max.max(1))
            .map(|k| {
                acc += (k as f64).powf(-exponent);
                acc
            })
            .collect();
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        Self { cdf }
    }

    pub fn mean(&self) -> f64 {
        let mut prev = 0.0;
        self.cdf
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let p = c - prev;
                prev = c;
                (k + 1) as f64 * p
            })
            .sum()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1) + 1
    }
}

struct StoryDraft {
    label: Label,
    first_seen: i64,
    cascades: Vec<Vec<Tweet>>,
}

const DEVICES_RELIABLE: [(&str, f64); 4] = [
    ("Twitter for iPhone", 0.4),
    ("Twitter for Android", 0.3),
    ("Twitter Web Client", 0.25),
    ("TweetDeck", 0.05),
];
const DEVICES_UNRELIABLE: [(&str, f64); 5] = [
    ("Twitter for iPhone", 0.2),
    ("Twitter for Android", 0.3),
    ("Twitter Web Client", 0.2),
    ("IFTTT", 0.15),
    ("dlvr.it", 0.15),
];

fn device(rng: &mut impl Rng, community: Community) -> String {
    let table: &[(&str, f64)] = match community {
        Community::Reliable => &DEVICES_RELIABLE,
        Community::Unreliable => &DEVICES_UNRELIABLE,
    };
    let mut u: f64 = rng.random();
    for (name, p) in table {
        if u < *p {
            return name.to_string();
        }
        u -= p;
    }
    table[table.len() - 1].0.to_string()
}

fn aligned_community(label: Label) -> Community {
    match label {
        Label::FakeNews => Community::Unreliable,
        Label::TrueNews => Community::Reliable,
    }
}

struct Ctx<'a> {
    cfg: &'a GenConfig,
    social: &'a SyntheticSocial,
    reliable: Vec<usize>,
    unreliable: Vec<usize>,
    size_true: SizeLaw,
    size_fake: SizeLaw,
}

impl Ctx<'_> {
    fn pool(&self, c: Community) -> &[usize] {
        let (own, other) = match c {
            Community::Reliable => (&self.reliable, &self.unreliable),
            Community::Unreliable => (&self.unreliable, &self.reliable),
        };
        if own.is_empty() {
            other
        } else {
            own
        }
    }

    /// A user from the label's community with probability `seed_alignment`.
    fn pick_user(&self, rng: &mut impl Rng, label: Label) -> usize {
        let aligned = aligned_community(label);
        let c = if rng.random_bool(self.cfg.seed_alignment) {
            aligned
        } else {
            match aligned {
                Community::Reliable => Community::Unreliable,
                Community::Unreliable => Community::Reliable,
            }
        };
        let pool = self.pool(c);
        pool[rng.random_range(0..pool.len())]
    }

    /// Users of one cascade in activation order: independent-cascade
    /// spreading from the source over follower edges, topped up with
    /// community-biased random users when the spread dies out early.
    fn spread(&self, rng: &mut impl Rng, label: Label, size: usize) -> Vec<usize> {
        let graph = &self.social.graph;
        let aligned = aligned_community(label);
        let source = self.pick_user(rng, label);
        let mut members = vec![source];
        let mut in_cascade: HashSet<usize> = HashSet::from([source]);
        let mut queue = VecDeque::from([source]);
        let mut followers: Vec<u32> = Vec::new();
        while members.len() < size {
            if let Some(u) = queue.pop_front() {
                followers.clear();
                followers.extend_from_slice(graph.followers_of(u));
                followers.shuffle(rng);
                for &f in &followers {
                    if members.len() >= size {
                        break;
                    }
                    let f = f as usize;
                    if in_cascade.contains(&f) {
                        continue;
                    }
                    let p = if self.social.communities[f] == aligned {
                        self.cfg.activation_aligned
                    } else {
                        self.cfg.activation_misaligned
                    };
                    if rng.random_bool(p) {
                        in_cascade.insert(f);
                        members.push(f);
                        queue.push_back(f);
                    }
                }
            } else {
                let mut u = self.pick_user(rng, label);
                let mut tries = 0;
                while in_cascade.contains(&u) {
                    tries += 1;
                    u = if tries < 64 {
                        self.pick_user(rng, label)
                    } else {
                        rng.random_range(0..graph.num_users())
                    };
                }
                in_cascade.insert(u);
                members.push(u);
                queue.push_back(u);
            }
        }
        members
    }

    fn story(&self, rng: &mut ChaCha8Rng, label: Label) -> StoryDraft {
        let cfg = self.cfg;
        let users = &self.social.graph;
        let horizon = (cfg.time_horizon_days * SECONDS_PER_DAY as f64) as i64;
        let first_seen = cfg.start_timestamp + if horizon > 0 { rng.random_range(0..=horizon) } else { 0 };
        let extra = if cfg.mean_cascades_per_url > 1.0 {
            Geometric::new(1.0 / cfg.mean_cascades_per_url).expect("p in (0, 1]").sample(rng) as usize
        } else {
            0
        };
        let delay_hours = match label {
            Label::TrueNews => cfg.retweet_delay_hours_true,
            Label::FakeNews => cfg.retweet_delay_hours_fake,
        };
        let retweet_delay = Exp::new(1.0 / delay_hours).expect("positive rate");
        let start_delay = Exp::new(1.0 / cfg.cascade_start_hours).expect("positive rate");
        let sizes = match label {
            Label::TrueNews => &self.size_true,
            Label::FakeNews => &self.size_fake,
        };
        let counts = |rng: &mut ChaCha8Rng, median: f64, sigma: f64| {
            LogNormal::new(median.ln(), sigma).expect("finite").sample(rng).round() as u64
        };

        let mut cascades = Vec::with_capacity(1 + extra);
        for k in 0..=extra {
            let start = if k == 0 {
                first_seen
            } else {
                first_seen + (start_delay.sample(rng) * 3600.0).round() as i64
            };
            let size = sizes.sample(rng).min(users.num_users());
            let members = self.spread(rng, label, size);
            let mut delays: Vec<i64> = (1..members.len())
                .map(|_| (retweet_delay.sample(rng) * 3600.0).round() as i64)
                .collect();
            delays.sort_unstable();
            let reply = counts(rng, 5.0, 1.2);
            let quote = counts(rng, 3.0, 1.2);
            let favorite = counts(rng, 40.0, 1.5);
            let retweet = counts(rng, 30.0, 1.5);
            let tweets = members
                .iter()
                .enumerate()
                .map(|(pos, &u)| {
                    let text_embedding = self.social.embeddings.neutral(rng, 12);
                    let hashtag_embedding = if rng.random_bool(0.5) {
                        self.social.embeddings.neutral(rng, 2)
                    } else {
                        vec![0.0; EMBEDDING_DIM]
                    };
                    Tweet {
                        tweet_id: TweetId(0),
                        author: users.user_at(u).user_id,
                        timestamp: if pos == 0 { start } else { start + delays[pos - 1] },
                        cascade_id: CascadeId(0),
                        is_source: pos == 0,
                        retweeted_reply_count: reply,
                        retweeted_quote_count: quote,
                        retweeted_favorite_count: favorite,
                        retweeted_retweet_count: retweet,
                        source_device: device(rng, self.social.communities[u]),
                        text_embedding,
                        hashtag_embedding,
                    }
                })
                .collect();
            cascades.push(tweets);
        }
        StoryDraft {
            label,
            first_seen,
            cascades,
        }
    }
}

/// Exactly `round(num_urls · fake_fraction)` fake labels at seeded positions.
fn draw_labels(cfg: &GenConfig) -> Vec<Label> {
    let fakes = (cfg.num_urls as f64 * cfg.fake_fraction).round() as usize;
    let mut labels: Vec<Label> = (0..cfg.num_urls)
        .map(|i| if i < fakes { Label::FakeNews } else { Label::TrueNews })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    labels.shuffle(&mut rng);
    labels
}

/// Stories and cascades over a generated social graph. Each URL draws from
/// its own random stream, so the output does not depend on `exec`.
pub fn generate_dataset(cfg: &GenConfig, social: &SyntheticSocial, exec: Executor) -> Result<(Vec<UrlStory>, Vec<CascadeRecord>)> {
    cfg.validate()?;
    let ctx = Ctx {
        cfg,
        social,
        reliable: social.members(Community::Reliable),
        unreliable: social.members(Community::Unreliable),
        size_true: SizeLaw::new(cfg.cascade_size_tail_exponent, cfg.max_cascade_size),
        size_fake: SizeLaw::new(
            cfg.fake_cascade_size_tail_exponent.unwrap_or(cfg.cascade_size_tail_exponent),
            cfg.max_cascade_size,
        ),
    };
    let jobs: Vec<(usize, Label)> = draw_labels(cfg).into_iter().enumerate().collect();
    let drafts = exec.map(jobs, |(idx, label)| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(URL_STREAM_BASE + idx as u64);
        ctx.story(&mut rng, label)
    });

    let mut stories = Vec::with_capacity(drafts.len());
    let mut cascades = Vec::new();
    let mut next_tweet = 0u64;
    for (idx, draft) in drafts.into_iter().enumerate() {
        let url_id = UrlId(idx as u64);
        let mut ids = Vec::with_capacity(draft.cascades.len());
        for mut tweets in draft.cascades {
            let cascade_id = CascadeId(cascades.len() as u64);
            for t in &mut tweets {
                t.tweet_id = TweetId(next_tweet);
                t.cascade_id = cascade_id;
                next_tweet += 1;
            }
            ids.push(cascade_id);
            cascades.push(CascadeRecord {
                cascade_id,
                url_id,
                tweets,
            });
        }
        stories.push(UrlStory {
            url_id,
            label: draft.label,
            first_seen: draft.first_seen,
            cascade_ids: ids,
        });
    }
    Ok((stories, cascades))
}

/// Social graph plus stories in one call.
pub fn generate(cfg: &GenConfig, exec: Executor) -> Result<Dataset> {
    let social = generate_social_graph(cfg)?;
    let (stories, cascades) = generate_dataset(cfg, &social, exec)?;
    Ok(Dataset {
        social: social.graph,
        stories,
        cascades,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::estimate_spreading_tree;

    fn small() -> GenConfig {
        GenConfig {
            num_users: 800,
            num_urls: 40,
            mean_cascades_per_url: 4.0,
            ..GenConfig::default()
        }
    }

    #[test]
    fn size_law_mean_matches_target() {
        let law = SizeLaw::new(2.1988, 500);
        assert!((law.mean() - 2.79).abs() < 0.01, "{}", law.mean());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<usize> = (0..20_000).map(|_| law.sample(&mut rng)).collect();
        assert!(draws.iter().all(|&s| (1..=500).contains(&s)));
        let mean = draws.iter().sum::<usize>() as f64 / draws.len() as f64;
        assert!((mean - 2.79).abs() < 0.3, "{mean}");
    }

    #[test]
    fn one_url_one_cascade() {
        let cfg = GenConfig {
            num_users: 200,
            num_urls: 1,
            mean_cascades_per_url: 1.0,
            ..GenConfig::default()
        };
        let d = generate(&cfg, Executor::Sequential).unwrap();
        assert_eq!(d.stories.len(), 1);
        assert_eq!(d.cascades.len(), 1);
    }

    #[test]
    fn generated_data_is_valid_and_spreadable() {
        let d = generate(&small(), Executor::Sequential).unwrap();
        d.validate().unwrap();
        for c in &d.cascades {
            let tree = estimate_spreading_tree(c, &d.social).unwrap();
            assert_eq!(tree.num_links(), c.len() - 1);
        }
    }

    #[test]
    fn executor_does_not_change_output() {
        let cfg = small();
        let a = generate(&cfg, Executor::Sequential).unwrap();
        let b = generate(&cfg, Executor::Parallel).unwrap();
        assert_eq!(a.stories, b.stories);
        assert_eq!(a.cascades, b.cascades);
    }
}
