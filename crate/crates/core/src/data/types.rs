use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of every text-like embedding (descriptions, tweet text, hashtags).
pub const EMBEDDING_DIM: usize = 200;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

id_type!(UserId);
id_type!(TweetId);
id_type!(CascadeId);
id_type!(UrlId);

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

pub const SECONDS_PER_HOUR: f64 = 3600.0;
pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub user_id: UserId,
    pub geo_enabled: bool,
    pub background_picture: bool,
    pub default_profile: bool,
    pub default_profile_image: bool,
    pub verified: bool,
    pub lang: String,
    pub description_embedding: Vec<f32>,
    pub statuses_count: u64,
    pub favourites_count: u64,
    pub listed_count: u64,
    pub followers_count: u64,
    pub friends_count: u64,
    pub created_at: Timestamp,
}

impl User {
    pub fn validate(&self) -> Result<()> {
        check_embedding(&self.description_embedding, || format!("user {} description", self.user_id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub tweet_id: TweetId,
    pub author: UserId,
    pub timestamp: Timestamp,
    pub cascade_id: CascadeId,
    pub is_source: bool,
    pub retweeted_reply_count: u64,
    pub retweeted_quote_count: u64,
    pub retweeted_favorite_count: u64,
    pub retweeted_retweet_count: u64,
    pub source_device: String,
    pub text_embedding: Vec<f32>,
    pub hashtag_embedding: Vec<f32>,
}

pub(crate) fn check_embedding(v: &[f32], what: impl FnOnce() -> String) -> Result<()> {
    if v.len() != EMBEDDING_DIM {
        return Err(Error::Shape(format!(
            "{}: embedding has {} components, expected {EMBEDDING_DIM}",
            what(),
            v.len()
        )));
    }
    if let Some(bad) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("{}: embedding component {bad}", what())));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    TrueNews,
    FakeNews,
}

impl Label {
    /// Index into the classifier's 2-vector of scores: 0 = true, 1 = fake.
    pub fn class_index(self) -> usize {
        match self {
            Label::TrueNews => 0,
            Label::FakeNews => 1,
        }
    }

    /// Fake news is the positive class for ROC analysis.
    pub fn is_fake(self) -> bool {
        self == Label::FakeNews
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrlStory {
    pub url_id: UrlId,
    pub label: Label,
    pub first_seen: Timestamp,
    pub cascade_ids: Vec<CascadeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeRecord {
    pub cascade_id: CascadeId,
    pub url_id: UrlId,
    pub tweets: Vec<Tweet>,
}

impl CascadeRecord {
    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn source(&self) -> Option<&Tweet> {
        self.tweets.first()
    }

    pub fn root_time(&self) -> Option<Timestamp> {
        self.source().map(|t| t.timestamp)
    }

    /// Non-empty, single source in first position, non-decreasing timestamps.
    pub fn validate(&self) -> Result<()> {
        let id = self.cascade_id.0;
        let first = self.tweets.first().ok_or(Error::EmptyCascade(id))?;
        let bad = |reason: &str| Error::CascadeOrder {
            cascade: id,
            reason: reason.to_string(),
        };
        if !first.is_source {
            return Err(bad("first tweet is not the source"));
        }
        if self.tweets[1..].iter().any(|t| t.is_source) {
            return Err(bad("more than one source tweet"));
        }
        if self.tweets.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
            return Err(bad("tweets are not sorted by timestamp"));
        }
        if self.tweets.iter().any(|t| t.cascade_id != self.cascade_id) {
            return Err(bad("tweet belongs to a different cascade"));
        }
        Ok(())
    }
}

/// Directed follow relations among users plus their profiles.
///
/// Users are addressed internally by dense index; `follows(a, b)` means
/// `a` follows `b`.
#[derive(Debug, Clone)]
pub struct SocialGraph {
    users: Vec<User>,
    index: HashMap<UserId, usize>,
    following: Vec<Vec<u32>>,
    followers: Vec<Vec<u32>>,
    edge_count: usize,
}

impl SocialGraph {
    /// Builds the graph, rejecting self-follows, dangling endpoints and
    /// duplicate user ids. Duplicate follow pairs collapse.
    pub fn new(users: Vec<User>, follows: impl IntoIterator<Item = (UserId, UserId)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(users.len());
        for (i, u) in users.iter().enumerate() {
            if index.insert(u.user_id, i).is_some() {
                return Err(Error::InvalidSocialGraph(format!("duplicate user {}", u.user_id)));
            }
        }
        let mut following = vec![Vec::new(); users.len()];
        let mut followers = vec![Vec::new(); users.len()];
        for (a, b) in follows {
            if a == b {
                return Err(Error::InvalidSocialGraph(format!("user {a} follows itself")));
            }
            let ia = *index.get(&a).ok_or(Error::UnknownUser(a.0))?;
            let ib = *index.get(&b).ok_or(Error::UnknownUser(b.0))?;
            following[ia].push(ib as u32);
            followers[ib].push(ia as u32);
        }
        let mut edge_count = 0;
        for list in following.iter_mut().chain(followers.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        for list in &following {
            edge_count += list.len();
        }
        Ok(Self {
            users,
            index,
            following,
            followers,
            edge_count,
        })
    }

    pub fn users(&self) -> &[User] {
        &self.users
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_follows(&self) -> usize {
        self.edge_count
    }

    pub fn index_of(&self, id: UserId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn user(&self, id: UserId) -> Result<&User> {
        self.index_of(id).map(|i| &self.users[i]).ok_or(Error::UnknownUser(id.0))
    }

    pub fn user_at(&self, idx: usize) -> &User {
        &self.users[idx]
    }

    /// Does `a` follow `b`?
    pub fn follows(&self, a: UserId, b: UserId) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(ia), Some(ib)) => self.follows_idx(ia, ib),
            _ => false,
        }
    }

    pub fn follows_idx(&self, a: usize, b: usize) -> bool {
        self.following[a].binary_search(&(b as u32)).is_ok()
    }

    /// Users that `idx` follows.
    pub fn following_of(&self, idx: usize) -> &[u32] {
        &self.following[idx]
    }

    /// Users following `idx`.
    pub fn followers_of(&self, idx: usize) -> &[u32] {
        &self.followers[idx]
    }

    /// All follow pairs as `(follower, followee)`, in index order.
    pub fn follow_pairs(&self) -> impl Iterator<Item = (UserId, UserId)> + '_ {
        self.following.iter().enumerate().flat_map(move |(a, list)| {
            list.iter()
                .map(move |&b| (self.users[a].user_id, self.users[b as usize].user_id))
        })
    }
}

/// A complete labelled corpus: social graph, stories and their cascades.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub social: SocialGraph,
    pub stories: Vec<UrlStory>,
    pub cascades: Vec<CascadeRecord>,
}

impl Dataset {
    /// Cross-checks references between stories, cascades and users.
    pub fn validate(&self) -> Result<()> {
        let mut cascade_owner = HashMap::new();
        for c in &self.cascades {
            c.validate()?;
            if cascade_owner.insert(c.cascade_id, c.url_id).is_some() {
                return Err(Error::InvalidInput(format!("duplicate cascade {}", c.cascade_id)));
            }
            for t in &c.tweets {
                self.social.user(t.author)?;
                check_embedding(&t.text_embedding, || format!("tweet {} text", t.tweet_id))?;
                check_embedding(&t.hashtag_embedding, || format!("tweet {} hashtags", t.tweet_id))?;
            }
        }
        let mut seen_urls = HashSet::new();
        for s in &self.stories {
            if !seen_urls.insert(s.url_id) {
                return Err(Error::InvalidInput(format!("duplicate url {}", s.url_id)));
            }
            for cid in &s.cascade_ids {
                match cascade_owner.get(cid) {
                    Some(owner) if *owner == s.url_id => {}
                    Some(owner) => {
                        return Err(Error::InvalidInput(format!(
                            "cascade {cid} listed under url {} but belongs to {owner}",
                            s.url_id
                        )))
                    }
                    None => return Err(Error::InvalidInput(format!("url {} lists unknown cascade {cid}", s.url_id))),
                }
            }
        }
        for u in self.social.users() {
            u.validate()?;
        }
        Ok(())
    }

    /// Cascades grouped by story, in the order of `stories` and of each
    /// story's `cascade_ids`.
    pub fn cascades_by_story(&self) -> Vec<Vec<&CascadeRecord>> {
        let by_id: HashMap<CascadeId, &CascadeRecord> =
            self.cascades.iter().map(|c| (c.cascade_id, c)).collect();
        self.stories
            .iter()
            .map(|s| s.cascade_ids.iter().filter_map(|id| by_id.get(id).copied()).collect())
            .collect()
    }

    pub fn story(&self, url: UrlId) -> Option<&UrlStory> {
        self.stories.iter().find(|s| s.url_id == url)
    }

    pub fn num_tweets(&self) -> usize {
        self.cascades.iter().map(|c| c.len()).sum()
    }
}
