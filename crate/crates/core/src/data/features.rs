//! Node feature layout and encoding.
//!
//! Every node of a propagation graph is a tweet together with its author.
//! The feature vector is split into named slices, each tagged with one of
//! four groups; the groups are the units of feature ablation.
//!
//! | group             | slices                                                   | width |
//! |-------------------|----------------------------------------------------------|-------|
//! | user_profile      | 4 profile booleans, verified, lang (8), description (200), account age | 214 |
//! | user_activity     | statuses, favourites, listed (log counts)                 | 3     |
//! | network_spreading | followers, friends, is_source, time delta, 4 retweeted counts, device (8) | 16 |
//! | content           | text embedding (200), hashtag embedding (200)             | 400   |

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::types::{check_embedding, Timestamp, Tweet, User, EMBEDDING_DIM, SECONDS_PER_DAY, SECONDS_PER_HOUR};
use crate::error::{Error, Result};

/// Buckets used by the hashed one-hot encoding of `lang` and `source_device`.
pub const CATEGORY_BUCKETS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    UserProfile,
    UserActivity,
    NetworkSpreading,
    Content,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] = [
        FeatureGroup::UserProfile,
        FeatureGroup::UserActivity,
        FeatureGroup::NetworkSpreading,
        FeatureGroup::Content,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::UserProfile => "user_profile",
            FeatureGroup::UserActivity => "user_activity",
            FeatureGroup::NetworkSpreading => "network_spreading",
            FeatureGroup::Content => "content",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSlice {
    pub name: String,
    pub group: FeatureGroup,
    pub start: usize,
    pub width: usize,
}

impl FeatureSlice {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.width
    }
}

/// Ordered, disjoint slices covering `[0, width)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    slices: Vec<FeatureSlice>,
    width: usize,
}

const STANDARD_LAYOUT: &[(&str, FeatureGroup, usize)] = &[
    ("geo_enabled", FeatureGroup::UserProfile, 1),
    ("background_picture", FeatureGroup::UserProfile, 1),
    ("default_profile", FeatureGroup::UserProfile, 1),
    ("default_profile_image", FeatureGroup::UserProfile, 1),
    ("verified", FeatureGroup::UserProfile, 1),
    ("lang", FeatureGroup::UserProfile, CATEGORY_BUCKETS),
    ("description_embedding", FeatureGroup::UserProfile, EMBEDDING_DIM),
    ("account_age_years", FeatureGroup::UserProfile, 1),
    ("statuses_count", FeatureGroup::UserActivity, 1),
    ("favourites_count", FeatureGroup::UserActivity, 1),
    ("listed_count", FeatureGroup::UserActivity, 1),
    ("followers_count", FeatureGroup::NetworkSpreading, 1),
    ("friends_count", FeatureGroup::NetworkSpreading, 1),
    ("is_source", FeatureGroup::NetworkSpreading, 1),
    ("time_delta", FeatureGroup::NetworkSpreading, 1),
    ("retweeted_reply_count", FeatureGroup::NetworkSpreading, 1),
    ("retweeted_quote_count", FeatureGroup::NetworkSpreading, 1),
    ("retweeted_favorite_count", FeatureGroup::NetworkSpreading, 1),
    ("retweeted_retweet_count", FeatureGroup::NetworkSpreading, 1),
    ("source_device", FeatureGroup::NetworkSpreading, CATEGORY_BUCKETS),
    ("text_embedding", FeatureGroup::Content, EMBEDDING_DIM),
    ("hashtag_embedding", FeatureGroup::Content, EMBEDDING_DIM),
];

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::standard()
    }
}

impl FeatureSchema {
    /// The 633-wide layout used throughout the crate.
    pub fn standard() -> Self {
        let mut start = 0;
        let slices = STANDARD_LAYOUT
            .iter()
            .map(|&(name, group, width)| {
                let s = FeatureSlice {
                    name: name.to_string(),
                    group,
                    start,
                    width,
                };
                start += width;
                s
            })
            .collect();
        Self { slices, width: start }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn slices(&self) -> &[FeatureSlice] {
        &self.slices
    }

    pub fn slice(&self, name: &str) -> Option<&FeatureSlice> {
        self.slices.iter().find(|s| s.name == name)
    }

    pub fn group_width(&self, group: FeatureGroup) -> usize {
        self.slices.iter().filter(|s| s.group == group).map(|s| s.width).sum()
    }

    /// Column ranges belonging to `group`.
    pub fn group_ranges(&self, group: FeatureGroup) -> impl Iterator<Item = Range<usize>> + '_ {
        self.slices.iter().filter(move |s| s.group == group).map(|s| s.range())
    }

    /// Slices are contiguous from zero, non-empty, and cover the width.
    pub fn validate(&self) -> Result<()> {
        let mut next = 0;
        for s in &self.slices {
            if s.start != next || s.width == 0 {
                return Err(Error::InvalidInput(format!("feature slice {} does not tile the schema", s.name)));
            }
            next += s.width;
        }
        if next != self.width {
            return Err(Error::InvalidInput("feature slices do not cover the schema width".into()));
        }
        Ok(())
    }
}

/// 64-bit FNV-1a; stable across platforms and releases.
fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn category_bucket(s: &str) -> usize {
    (fnv1a(s) % CATEGORY_BUCKETS as u64) as usize
}

fn log_count(x: u64) -> f64 {
    (x as f64).ln_1p()
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Encodes one tweet node. `cascade_root_time` is the timestamp of the
/// source tweet of the tweet's own cascade.
pub fn encode_node_features(
    tweet: &Tweet,
    user: &User,
    cascade_root_time: Timestamp,
    schema: &FeatureSchema,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; schema.width()];
    encode_node_features_into(tweet, user, cascade_root_time, schema, &mut out)?;
    Ok(out)
}

pub(crate) fn encode_node_features_into(
    tweet: &Tweet,
    user: &User,
    cascade_root_time: Timestamp,
    schema: &FeatureSchema,
    out: &mut [f64],
) -> Result<()> {
    if tweet.author != user.user_id {
        return Err(Error::InvalidInput(format!(
            "tweet {} is by {}, not {}",
            tweet.tweet_id, tweet.author, user.user_id
        )));
    }
    check_embedding(&user.description_embedding, || format!("user {} description", user.user_id))?;
    check_embedding(&tweet.text_embedding, || format!("tweet {} text", tweet.tweet_id))?;
    check_embedding(&tweet.hashtag_embedding, || format!("tweet {} hashtags", tweet.tweet_id))?;
    if out.len() != schema.width() {
        return Err(Error::Shape(format!("feature buffer {} vs schema {}", out.len(), schema.width())));
    }
    out.fill(0.0);

    for slice in schema.slices() {
        let dst = &mut out[slice.range()];
        match slice.name.as_str() {
            "geo_enabled" => dst[0] = flag(user.geo_enabled),
            "background_picture" => dst[0] = flag(user.background_picture),
            "default_profile" => dst[0] = flag(user.default_profile),
            "default_profile_image" => dst[0] = flag(user.default_profile_image),
            "verified" => dst[0] = flag(user.verified),
            "lang" => dst[category_bucket(&user.lang) % slice.width] = 1.0,
            "description_embedding" => copy_embedding(dst, &user.description_embedding),
            "account_age_years" => {
                let days = (tweet.timestamp - user.created_at) as f64 / SECONDS_PER_DAY as f64;
                dst[0] = days / 365.0;
            }
            "statuses_count" => dst[0] = log_count(user.statuses_count),
            "favourites_count" => dst[0] = log_count(user.favourites_count),
            "listed_count" => dst[0] = log_count(user.listed_count),
            "followers_count" => dst[0] = log_count(user.followers_count),
            "friends_count" => dst[0] = log_count(user.friends_count),
            "is_source" => dst[0] = flag(tweet.is_source),
            "time_delta" => {
                let secs = (tweet.timestamp - cascade_root_time).max(0) as f64;
                dst[0] = (secs / SECONDS_PER_HOUR).ln_1p();
            }
            "retweeted_reply_count" => dst[0] = log_count(tweet.retweeted_reply_count),
            "retweeted_quote_count" => dst[0] = log_count(tweet.retweeted_quote_count),
            "retweeted_favorite_count" => dst[0] = log_count(tweet.retweeted_favorite_count),
            "retweeted_retweet_count" => dst[0] = log_count(tweet.retweeted_retweet_count),
            "source_device" => dst[category_bucket(&tweet.source_device) % slice.width] = 1.0,
            "text_embedding" => copy_embedding(dst, &tweet.text_embedding),
            "hashtag_embedding" => copy_embedding(dst, &tweet.hashtag_embedding),
            other => return Err(Error::InvalidInput(format!("unknown feature slice {other}"))),
        }
    }
    Ok(())
}

fn copy_embedding(dst: &mut [f64], src: &[f32]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = f64::from(*s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::types::{CascadeId, TweetId, UserId};

    pub(crate) fn user() -> User {
        User {
            user_id: UserId(1),
            geo_enabled: true,
            background_picture: false,
            default_profile: true,
            default_profile_image: false,
            verified: false,
            lang: "en".into(),
            description_embedding: vec![0.25; EMBEDDING_DIM],
            statuses_count: 10,
            favourites_count: 0,
            listed_count: 3,
            followers_count: 0,
            friends_count: 7,
            created_at: 0,
        }
    }

    fn tweet(ts: i64, is_source: bool) -> Tweet {
        Tweet {
            tweet_id: TweetId(9),
            author: UserId(1),
            timestamp: ts,
            cascade_id: CascadeId(0),
            is_source,
            retweeted_reply_count: 1,
            retweeted_quote_count: 0,
            retweeted_favorite_count: 5,
            retweeted_retweet_count: 2,
            source_device: "Twitter for iPhone".into(),
            text_embedding: vec![-0.5; EMBEDDING_DIM],
            hashtag_embedding: vec![0.0; EMBEDDING_DIM],
        }
    }

    fn at(v: &[f64], schema: &FeatureSchema, name: &str) -> f64 {
        v[schema.slice(name).unwrap().start]
    }

    #[test]
    fn standard_schema_widths() {
        let s = FeatureSchema::standard();
        s.validate().unwrap();
        assert_eq!(s.width(), 633);
        assert_eq!(s.group_width(FeatureGroup::UserProfile), 214);
        assert_eq!(s.group_width(FeatureGroup::UserActivity), 3);
        assert_eq!(s.group_width(FeatureGroup::NetworkSpreading), 16);
        assert_eq!(s.group_width(FeatureGroup::Content), 400);
    }

    #[test]
    fn booleans_and_zero_counts() {
        let s = FeatureSchema::standard();
        let v = encode_node_features(&tweet(100, false), &user(), 0, &s).unwrap();
        assert_eq!(at(&v, &s, "verified"), 0.0);
        assert_eq!(at(&v, &s, "followers_count"), 0.0);
        assert_eq!(at(&v, &s, "geo_enabled"), 1.0);
    }

    #[test]
    fn log_count_of_999() {
        let s = FeatureSchema::standard();
        let mut u = user();
        u.followers_count = 999;
        let v = encode_node_features(&tweet(0, true), &u, 0, &s).unwrap();
        assert!((at(&v, &s, "followers_count") - 1000f64.ln()).abs() < 1e-12);
        assert!((at(&v, &s, "followers_count") - 6.9078).abs() < 1e-4);
    }

    #[test]
    fn source_tweet_time_delta_and_flag() {
        let s = FeatureSchema::standard();
        let v = encode_node_features(&tweet(500, true), &user(), 500, &s).unwrap();
        assert_eq!(at(&v, &s, "time_delta"), 0.0);
        assert_eq!(at(&v, &s, "is_source"), 1.0);
        let later = encode_node_features(&tweet(500 + 3600, false), &user(), 500, &s).unwrap();
        assert!((at(&later, &s, "time_delta") - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn one_hot_and_embeddings() {
        let s = FeatureSchema::standard();
        let v = encode_node_features(&tweet(365 * 86_400, false), &user(), 0, &s).unwrap();
        let lang = &v[s.slice("lang").unwrap().range()];
        assert_eq!(lang.iter().sum::<f64>(), 1.0);
        assert_eq!(lang[category_bucket("en")], 1.0);
        assert_eq!(at(&v, &s, "account_age_years"), 1.0);
        assert!(v[s.slice("text_embedding").unwrap().range()].iter().all(|&x| x == -0.5));
        assert!(v[s.slice("description_embedding").unwrap().range()].iter().all(|&x| x == 0.25));
    }

    #[test]
    fn non_finite_embedding_rejected() {
        let s = FeatureSchema::standard();
        let mut t = tweet(0, true);
        t.text_embedding[3] = f32::NAN;
        assert!(matches!(encode_node_features(&t, &user(), 0, &s), Err(Error::NonFinite(_))));
    }

    #[test]
    fn encoding_is_bit_identical() {
        let s = FeatureSchema::standard();
        let a = encode_node_features(&tweet(7777, false), &user(), 10, &s).unwrap();
        let b = encode_node_features(&tweet(7777, false), &user(), 10, &s).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
