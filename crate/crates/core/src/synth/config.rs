use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EmbeddingMode {
    /// Random unit vectors drawn from the generator's seed.
    SeededRandomUnit,
    /// Averages of random words from a plain-text word-vector file.
    LoadFile { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommunityFractions {
    pub reliable: f64,
    pub unreliable: f64,
}

impl CommunityFractions {
    pub fn unreliable_share(&self) -> f64 {
        self.unreliable / (self.reliable + self.unreliable)
    }
}

/// Generator settings. The defaults are calibrated to the published corpus
/// statistics: 16.74% fake URLs, 2.79 tweets per cascade, ~12 follow edges
/// per user and ~91% of a cascade's first-day tweets inside 7 hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub seed: u64,
    pub num_users: usize,
    pub num_urls: usize,
    pub fake_fraction: f64,
    pub mean_cascades_per_url: f64,
    /// Exponent of the truncated discrete power law of cascade sizes.
    pub cascade_size_tail_exponent: f64,
    pub max_cascade_size: usize,
    /// Exponent used for fake-news cascades; `None` shares the one above.
    pub fake_cascade_size_tail_exponent: Option<f64>,
    /// Follow edges created by each arriving user (preferential attachment).
    pub follows_per_user: usize,
    /// Probability of rejecting a cross-community follow.
    pub homophily_strength: f64,
    pub community_fractions: CommunityFractions,
    pub time_horizon_days: f64,
    pub start_timestamp: i64,
    pub embedding_mode: EmbeddingMode,
    /// Probability that a cascade source belongs to the community matching
    /// the story label (unreliable for fake, reliable for true).
    pub seed_alignment: f64,
    /// Per-edge activation probability for followers in the matching community.
    pub activation_aligned: f64,
    /// Per-edge activation probability for followers in the other community.
    pub activation_misaligned: f64,
    /// Mean retweet delay after the cascade source, hours.
    pub retweet_delay_hours_true: f64,
    pub retweet_delay_hours_fake: f64,
    /// Mean delay of a story's later cascades after its first one, hours.
    pub cascade_start_hours: f64,
    /// Pull of description embeddings towards the user's community direction.
    pub profile_signal: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            num_users: 10_000,
            num_urls: 300,
            fake_fraction: 0.1674,
            mean_cascades_per_url: 12.0,
            cascade_size_tail_exponent: 2.1988,
            max_cascade_size: 500,
            fake_cascade_size_tail_exponent: None,
            follows_per_user: 12,
            homophily_strength: 0.8,
            community_fractions: CommunityFractions {
                reliable: 0.7,
                unreliable: 0.3,
            },
            time_horizon_days: 540.0,
            // 2016-01-01T00:00:00Z
            start_timestamp: 1_451_606_400,
            embedding_mode: EmbeddingMode::SeededRandomUnit,
            seed_alignment: 0.8,
            activation_aligned: 0.08,
            activation_misaligned: 0.01,
            retweet_delay_hours_true: 11.0,
            retweet_delay_hours_fake: 5.5,
            cascade_start_hours: 10.0,
            profile_signal: 0.5,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.fake_fraction > 0.0 && self.fake_fraction < 1.0) {
            return bad("fake_fraction must lie in (0, 1)");
        }
        if self.num_users == 0 || self.num_urls == 0 || self.max_cascade_size == 0 {
            return bad("user, url and cascade-size counts must be positive");
        }
        if !(self.mean_cascades_per_url >= 1.0) {
            return bad("mean_cascades_per_url must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.homophily_strength) {
            return bad("homophily_strength must lie in [0, 1]");
        }
        let cf = self.community_fractions;
        if !(cf.reliable >= 0.0 && cf.unreliable >= 0.0 && cf.reliable + cf.unreliable > 0.0) {
            return bad("community fractions must be non-negative and not both zero");
        }
        for (name, p) in [
            ("seed_alignment", self.seed_alignment),
            ("activation_aligned", self.activation_aligned),
            ("activation_misaligned", self.activation_misaligned),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidInput(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.retweet_delay_hours_true > 0.0
            && self.retweet_delay_hours_fake > 0.0
            && self.cascade_start_hours > 0.0
            && self.time_horizon_days >= 0.0)
        {
            return bad("time constants must be positive");
        }
        if !self.cascade_size_tail_exponent.is_finite()
            || self.fake_cascade_size_tail_exponent.is_some_and(|e| !e.is_finite())
        {
            return bad("tail exponent must be finite");
        }
        Ok(())
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
