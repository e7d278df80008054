use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{EmbeddingMode, GenConfig};
use crate::data::{category_bucket, SocialGraph, User, UserId, WordVectors, EMBEDDING_DIM, SECONDS_PER_DAY};
use crate::error::Result;

/// Latent credibility community of a synthetic user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Community {
    Reliable,
    Unreliable,
}

pub(crate) enum EmbeddingSource {
    Random,
    Words(WordVectors),
}

impl EmbeddingSource {
    pub(crate) fn from_mode(mode: &EmbeddingMode) -> Result<Self> {
        Ok(match mode {
            EmbeddingMode::SeededRandomUnit => EmbeddingSource::Random,
            EmbeddingMode::LoadFile { path } => EmbeddingSource::Words(WordVectors::load(path)?),
        })
    }

    /// A text embedding with no community bias.
    pub(crate) fn neutral(&self, rng: &mut impl Rng, words: usize) -> Vec<f32> {
        match self {
            EmbeddingSource::Random => random_unit(rng),
            EmbeddingSource::Words(wv) if !wv.is_empty() => {
                let picks: Vec<&str> = (0..words).map(|_| wv.tokens()[rng.random_range(0..wv.len())].as_str()).collect();
                wv.average(picks)
            }
            EmbeddingSource::Words(_) => vec![0.0; EMBEDDING_DIM],
        }
    }
}

/// The generated follow graph with each user's latent community.
pub struct SyntheticSocial {
    pub graph: SocialGraph,
    pub communities: Vec<Community>,
    pub(crate) embeddings: EmbeddingSource,
}

impl SyntheticSocial {
    pub fn members(&self, c: Community) -> Vec<usize> {
        (0..self.communities.len()).filter(|&i| self.communities[i] == c).collect()
    }

    /// Fraction of follow edges joining different communities.
    pub fn cross_community_fraction(&self) -> f64 {
        let g = &self.graph;
        let mut cross = 0usize;
        for a in 0..g.num_users() {
            cross += g
                .following_of(a)
                .iter()
                .filter(|&&b| self.communities[a] != self.communities[b as usize])
                .count();
        }
        if g.num_follows() == 0 {
            0.0
        } else {
            cross as f64 / g.num_follows() as f64
        }
    }
}

pub(crate) fn random_unit(rng: &mut impl Rng) -> Vec<f32> {
    loop {
        let v: Vec<f64> = (0..EMBEDDING_DIM).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.iter().map(|x| (x / norm) as f32).collect();
        }
    }
}

fn biased_unit(rng: &mut impl Rng, direction: &[f32], sign: f64, strength: f64) -> Vec<f32> {
    let noise = random_unit(rng);
    let v: Vec<f64> = noise
        .iter()
        .zip(direction)
        .map(|(n, d)| f64::from(*n) + sign * strength * f64::from(*d))
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| (x / norm) as f32).collect()
}

const LANGS: [&str; 8] = ["en", "es", "fr", "de", "pt", "it", "ja", "ru"];

fn lognormal(rng: &mut impl Rng, median: f64, sigma: f64) -> u64 {
    let d = LogNormal::new(median.ln(), sigma).expect("finite parameters");
    d.sample(rng).round() as u64
}

/// Preferential-attachment follow graph with community homophily.
///
/// Users arrive one by one and follow up to `follows_per_user` earlier
/// users picked with probability proportional to (followers + 1);
/// a cross-community pick is rejected with probability
/// `homophily_strength`. Profile and activity fields are heavy-tailed and
/// shifted by community.
pub fn generate_social_graph(cfg: &GenConfig) -> Result<SyntheticSocial> {
    cfg.validate()?;
    let embeddings = EmbeddingSource::from_mode(&cfg.embedding_mode)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.num_users;
    let q = cfg.community_fractions.unreliable_share();
    let communities: Vec<Community> = (0..n)
        .map(|_| {
            if rng.random_bool(q) {
                Community::Unreliable
            } else {
                Community::Reliable
            }
        })
        .collect();

    let m = cfg.follows_per_user;
    let mut urn: Vec<u32> = Vec::with_capacity(n * (m + 1));
    let mut follows: Vec<(u32, u32)> = Vec::with_capacity(n * m);
    let mut in_degree = vec![0u64; n];
    let mut out_degree = vec![0u64; n];
    let mut chosen: Vec<u32> = Vec::with_capacity(m);
    for t in 0..n {
        chosen.clear();
        let want = m.min(t);
        let mut attempts = 0;
        while chosen.len() < want && attempts < 50 * m {
            attempts += 1;
            let cand = urn[rng.random_range(0..urn.len())];
            if chosen.contains(&cand) {
                continue;
            }
            if communities[cand as usize] != communities[t] && rng.random_bool(cfg.homophily_strength) {
                continue;
            }
            chosen.push(cand);
        }
        for &c in &chosen {
            follows.push((t as u32, c));
            urn.push(c);
            in_degree[c as usize] += 1;
            out_degree[t] += 1;
        }
        urn.push(t as u32);
    }

    let mut dir_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dir_rng.set_stream(2);
    let direction = random_unit(&mut dir_rng);

    let users = (0..n)
        .map(|i| {
            let unreliable = communities[i] == Community::Unreliable;
            let pick = |rel: f64, unrel: f64| if unreliable { unrel } else { rel };
            let age_years = if unreliable {
                rng.random_range(0.2..6.0)
            } else {
                rng.random_range(1.0..10.0)
            };
            let description_embedding = match &embeddings {
                EmbeddingSource::Random => {
                    biased_unit(&mut rng, &direction, if unreliable { -1.0 } else { 1.0 }, cfg.profile_signal)
                }
                EmbeddingSource::Words(wv) if !wv.is_empty() => {
                    // words from the community's half of the vocabulary, mostly
                    let own: Vec<&str> = wv
                        .tokens()
                        .iter()
                        .filter(|t| (category_bucket(t) % 2 == 1) == unreliable)
                        .map(String::as_str)
                        .collect();
                    let words: Vec<&str> = (0..8)
                        .map(|_| {
                            if !own.is_empty() && rng.random_bool(0.8) {
                                *own.choose(&mut rng).expect("non-empty")
                            } else {
                                wv.tokens()[rng.random_range(0..wv.len())].as_str()
                            }
                        })
                        .collect();
                    wv.average(words)
                }
                EmbeddingSource::Words(_) => vec![0.0; EMBEDDING_DIM],
            };
            let followers_scale = lognormal(&mut rng, 20.0, 0.5).max(1);
            let friends_scale = lognormal(&mut rng, 10.0, 0.5).max(1);
            User {
                user_id: UserId(i as u64),
                geo_enabled: rng.random_bool(0.35),
                background_picture: rng.random_bool(pick(0.7, 0.55)),
                default_profile: rng.random_bool(pick(0.35, 0.6)),
                default_profile_image: rng.random_bool(pick(0.04, 0.15)),
                verified: rng.random_bool(pick(0.12, 0.03)),
                lang: if rng.random_bool(0.85) {
                    "en".to_string()
                } else {
                    LANGS[rng.random_range(1..LANGS.len())].to_string()
                },
                description_embedding,
                statuses_count: lognormal(&mut rng, pick(3000.0, 8000.0), 1.2),
                favourites_count: lognormal(&mut rng, pick(2000.0, 4000.0), 1.5),
                listed_count: lognormal(&mut rng, pick(20.0, 5.0), 1.2),
                followers_count: in_degree[i] * followers_scale + lognormal(&mut rng, 30.0, 1.0),
                friends_count: out_degree[i] * friends_scale + lognormal(&mut rng, 20.0, 1.0),
                created_at: cfg.start_timestamp - (age_years * 365.0 * SECONDS_PER_DAY as f64) as i64,
            }
        })
        .collect();

    let graph = SocialGraph::new(
        users,
        follows.into_iter().map(|(a, b)| (UserId(u64::from(a)), UserId(u64::from(b)))),
    )?;
    Ok(SyntheticSocial {
        graph,
        communities,
        embeddings,
    })
}
