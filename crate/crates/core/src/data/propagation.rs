//! Spreading-tree estimation and propagation-graph construction.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::features::{encode_node_features_into, FeatureSchema};
use super::types::{CascadeRecord, Label, SocialGraph, Tweet, TweetId, UrlId, UrlStory, UserId};
use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Parent links of one or more cascades (a forest when merged).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpreadingTree {
    roots: Vec<TweetId>,
    parent: HashMap<TweetId, TweetId>,
}

impl SpreadingTree {
    pub fn parent_of(&self, tweet: TweetId) -> Option<TweetId> {
        self.parent.get(&tweet).copied()
    }

    pub fn roots(&self) -> &[TweetId] {
        &self.roots
    }

    pub fn num_links(&self) -> usize {
        self.parent.len()
    }

    /// Did the news spread from `from` to `to`?
    pub fn spreads(&self, from: TweetId, to: TweetId) -> bool {
        self.parent_of(to) == Some(from)
    }

    pub fn merge(trees: impl IntoIterator<Item = SpreadingTree>) -> Self {
        let mut out = SpreadingTree::default();
        for t in trees {
            out.roots.extend(t.roots);
            out.parent.extend(t.parent);
        }
        out
    }
}

/// Assigns every retweet its most likely predecessor.
///
/// A retweet whose author follows at least one earlier author is attached
/// to the latest such earlier tweet. Otherwise it is attached to the earlier
/// tweet whose author has the most followers, the earliest one on ties.
pub fn estimate_spreading_tree(cascade: &CascadeRecord, social: &SocialGraph) -> Result<SpreadingTree> {
    cascade.validate()?;
    let authors: Vec<usize> = cascade
        .tweets
        .iter()
        .map(|t| social.index_of(t.author).ok_or(Error::UnknownUser(t.author.0)))
        .collect::<Result<_>>()?;

    let mut parent = HashMap::with_capacity(cascade.len().saturating_sub(1));
    // Running argmax of followers over the prefix; strict `>` keeps the earliest.
    let mut most_popular = 0usize;
    for n in 1..cascade.len() {
        let author = authors[n];
        let followed = (0..n).rev().find(|&k| social.follows_idx(author, authors[k]));
        let p = followed.unwrap_or(most_popular);
        parent.insert(cascade.tweets[n].tweet_id, cascade.tweets[p].tweet_id);

        if social.user_at(authors[n]).followers_count > social.user_at(authors[most_popular]).followers_count {
            most_popular = n;
        }
    }
    Ok(SpreadingTree {
        roots: vec![cascade.tweets[0].tweet_id],
        parent,
    })
}

/// Membership of an edge `(i, j)` in the four relations, in the fixed order
/// (i follows j, j follows i, spread i→j, spread j→i).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeFlags {
    pub i_follows_j: bool,
    pub j_follows_i: bool,
    pub spread_i_to_j: bool,
    pub spread_j_to_i: bool,
}

impl EdgeFlags {
    pub fn any(&self) -> bool {
        self.i_follows_j || self.j_follows_i || self.spread_i_to_j || self.spread_j_to_i
    }

    /// The same relation seen from `(j, i)`.
    pub fn reversed(&self) -> Self {
        Self {
            i_follows_j: self.j_follows_i,
            j_follows_i: self.i_follows_j,
            spread_i_to_j: self.spread_j_to_i,
            spread_j_to_i: self.spread_i_to_j,
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        let f = |b: bool| if b { 1.0 } else { 0.0 };
        [
            f(self.i_follows_j),
            f(self.j_follows_i),
            f(self.spread_i_to_j),
            f(self.spread_j_to_i),
        ]
    }

    fn merge(&mut self, other: EdgeFlags) {
        self.i_follows_j |= other.i_follows_j;
        self.j_follows_i |= other.j_follows_i;
        self.spread_i_to_j |= other.spread_i_to_j;
        self.spread_j_to_i |= other.spread_j_to_i;
    }
}

pub fn encode_edge_features(i: &Tweet, j: &Tweet, social: &SocialGraph, tree: &SpreadingTree) -> [f64; 4] {
    edge_flags(i, j, social, tree).to_array()
}

pub fn edge_flags(i: &Tweet, j: &Tweet, social: &SocialGraph, tree: &SpreadingTree) -> EdgeFlags {
    EdgeFlags {
        i_follows_j: social.follows(i.author, j.author),
        j_follows_i: social.follows(j.author, i.author),
        spread_i_to_j: tree.spreads(i.tweet_id, j.tweet_id),
        spread_j_to_i: tree.spreads(j.tweet_id, i.tweet_id),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    UrlWise,
    CascadeWise,
}

impl Scope {
    pub fn name(self) -> &'static str {
        match self {
            Scope::UrlWise => "url",
            Scope::CascadeWise => "cascade",
        }
    }
}

/// Stored once per unordered node pair with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub flags: EdgeFlags,
}

/// Tweet-level graph fed to the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationGraph {
    pub url_id: UrlId,
    pub nodes: Vec<TweetId>,
    /// Author of each node, parallel to `nodes`.
    pub authors: Vec<UserId>,
    pub node_features: Tensor,
    pub edges: Vec<Edge>,
    pub label: Label,
    pub scope: Scope,
    pub diffusion_window_hours: Option<f64>,
}

impl PropagationGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Checks the structural invariants: flags set, pairs unique and ordered,
    /// indices in range, features finite.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.node_features.rows() != n || self.authors.len() != n {
            return Err(Error::Shape("node feature rows do not match node count".into()));
        }
        let mut prev: Option<(usize, usize)> = None;
        for e in &self.edges {
            if e.i >= e.j || e.j >= n {
                return Err(Error::InvalidInput(format!("bad edge ({}, {})", e.i, e.j)));
            }
            if !e.flags.any() {
                return Err(Error::InvalidInput(format!("edge ({}, {}) has no relation", e.i, e.j)));
            }
            if prev.is_some_and(|p| p >= (e.i, e.j)) {
                return Err(Error::InvalidInput("edges not strictly sorted".into()));
            }
            prev = Some((e.i, e.j));
        }
        if !self.node_features.data().iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("node features".into()));
        }
        Ok(())
    }
}

/// Builds the propagation graph of a story (url-wise) or one of its cascades
/// (cascade-wise). Cascades are taken in `cascade_id` order, so the result
/// does not depend on the order they are passed in.
pub fn build_propagation_graph(
    story: &UrlStory,
    cascades: &[&CascadeRecord],
    social: &SocialGraph,
    scope: Scope,
    schema: &FeatureSchema,
) -> Result<PropagationGraph> {
    if scope == Scope::CascadeWise && cascades.len() != 1 {
        return Err(Error::InvalidInput(format!(
            "cascade-wise graph needs exactly one cascade, got {}",
            cascades.len()
        )));
    }
    if cascades.is_empty() {
        return Err(Error::InvalidInput(format!("story {} has no cascades in scope", story.url_id)));
    }
    if let Some(c) = cascades.iter().find(|c| c.url_id != story.url_id) {
        return Err(Error::InvalidInput(format!(
            "cascade {} belongs to url {}, not {}",
            c.cascade_id, c.url_id, story.url_id
        )));
    }
    let mut ordered: Vec<&CascadeRecord> = cascades.to_vec();
    ordered.sort_by_key(|c| c.cascade_id);

    let trees = ordered
        .iter()
        .map(|c| estimate_spreading_tree(c, social))
        .collect::<Result<Vec<_>>>()?;

    let tweets: Vec<(&Tweet, i64)> = ordered
        .iter()
        .flat_map(|c| {
            let root = c.tweets[0].timestamp;
            c.tweets.iter().map(move |t| (t, root))
        })
        .collect();
    let n = tweets.len();
    let node_of: HashMap<TweetId, usize> = tweets.iter().enumerate().map(|(k, (t, _))| (t.tweet_id, k)).collect();
    if node_of.len() != n {
        return Err(Error::InvalidInput(format!("story {} repeats a tweet id", story.url_id)));
    }

    let mut features = Tensor::zeros(n, schema.width());
    let mut author_idx = Vec::with_capacity(n);
    for (k, (t, root)) in tweets.iter().enumerate() {
        let ui = social.index_of(t.author).ok_or(Error::UnknownUser(t.author.0))?;
        author_idx.push(ui);
        encode_node_features_into(t, social.user_at(ui), *root, schema, features.row_mut(k))?;
    }

    let mut edges: BTreeMap<(usize, usize), EdgeFlags> = BTreeMap::new();
    let mut add = |a: usize, b: usize, f: EdgeFlags| {
        let (key, f) = if a < b { ((a, b), f) } else { ((b, a), f.reversed()) };
        edges.entry(key).or_default().merge(f);
    };

    let mut nodes_by_author: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, &u) in author_idx.iter().enumerate() {
        nodes_by_author.entry(u).or_default().push(k);
    }
    for (a, &ua) in author_idx.iter().enumerate() {
        for &ub in social.following_of(ua) {
            if let Some(targets) = nodes_by_author.get(&(ub as usize)) {
                for &b in targets {
                    add(
                        a,
                        b,
                        EdgeFlags {
                            i_follows_j: true,
                            ..Default::default()
                        },
                    );
                }
            }
        }
    }
    for tree in &trees {
        for (child, parent) in &tree.parent {
            add(
                node_of[parent],
                node_of[child],
                EdgeFlags {
                    spread_i_to_j: true,
                    ..Default::default()
                },
            );
        }
    }

    Ok(PropagationGraph {
        url_id: story.url_id,
        nodes: tweets.iter().map(|(t, _)| t.tweet_id).collect(),
        authors: tweets.iter().map(|(t, _)| t.author).collect(),
        node_features: features,
        edges: edges.into_iter().map(|((i, j), flags)| Edge { i, j, flags }).collect(),
        label: story.label,
        scope,
        diffusion_window_hours: None,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::data::types::{CascadeId, User, EMBEDDING_DIM};

    pub fn user(id: u64, followers: u64) -> User {
        User {
            user_id: UserId(id),
            geo_enabled: false,
            background_picture: false,
            default_profile: false,
            default_profile_image: false,
            verified: false,
            lang: "en".into(),
            description_embedding: vec![0.0; EMBEDDING_DIM],
            statuses_count: 0,
            favourites_count: 0,
            listed_count: 0,
            followers_count: followers,
            friends_count: 0,
            created_at: 0,
        }
    }

    pub fn tweet(id: u64, author: u64, ts: i64, cascade: u64, is_source: bool) -> Tweet {
        Tweet {
            tweet_id: TweetId(id),
            author: UserId(author),
            timestamp: ts,
            cascade_id: CascadeId(cascade),
            is_source,
            retweeted_reply_count: 0,
            retweeted_quote_count: 0,
            retweeted_favorite_count: 0,
            retweeted_retweet_count: 0,
            source_device: "web".into(),
            text_embedding: vec![0.0; EMBEDDING_DIM],
            hashtag_embedding: vec![0.0; EMBEDDING_DIM],
        }
    }

    /// Tweets by the given authors, one minute apart, ids `base..`.
    pub fn cascade(id: u64, url: u64, base: u64, authors: &[u64]) -> CascadeRecord {
        CascadeRecord {
            cascade_id: CascadeId(id),
            url_id: UrlId(url),
            tweets: authors
                .iter()
                .enumerate()
                .map(|(k, &a)| tweet(base + k as u64, a, 60 * k as i64, id, k == 0))
                .collect(),
        }
    }

    fn social(followers: &[(u64, u64)], follows: &[(u64, u64)]) -> SocialGraph {
        SocialGraph::new(
            followers.iter().map(|&(id, f)| user(id, f)).collect(),
            follows.iter().map(|&(a, b)| (UserId(a), UserId(b))),
        )
        .unwrap()
    }

    #[test]
    fn single_candidate_parent() {
        let g = social(&[(1, 0), (2, 0)], &[(2, 1)]);
        let tree = estimate_spreading_tree(&cascade(0, 0, 0, &[1, 2]), &g).unwrap();
        assert_eq!(tree.parent_of(TweetId(1)), Some(TweetId(0)));
        assert_eq!(tree.parent_of(TweetId(0)), None);
    }

    #[test]
    fn most_followed_predecessor_without_follows() {
        let g = social(&[(1, 10), (2, 500), (3, 0)], &[]);
        let tree = estimate_spreading_tree(&cascade(0, 0, 0, &[1, 2, 3]), &g).unwrap();
        assert_eq!(tree.parent_of(TweetId(2)), Some(TweetId(1)));
    }

    #[test]
    fn latest_followed_predecessor() {
        let g = social(&[(1, 900), (2, 1), (3, 0)], &[(3, 1), (3, 2)]);
        let tree = estimate_spreading_tree(&cascade(0, 0, 0, &[1, 2, 3]), &g).unwrap();
        assert_eq!(tree.parent_of(TweetId(2)), Some(TweetId(1)));
    }

    #[test]
    fn follower_tie_picks_earliest() {
        let g = social(&[(1, 5), (2, 5), (3, 0)], &[]);
        let tree = estimate_spreading_tree(&cascade(0, 0, 0, &[1, 2, 3]), &g).unwrap();
        assert_eq!(tree.parent_of(TweetId(2)), Some(TweetId(0)));
    }

    #[test]
    fn spreading_tree_errors() {
        let g = social(&[(1, 0), (2, 0)], &[]);
        let empty = CascadeRecord {
            cascade_id: CascadeId(4),
            url_id: UrlId(0),
            tweets: vec![],
        };
        assert!(matches!(estimate_spreading_tree(&empty, &g), Err(Error::EmptyCascade(4))));
        let mut c = cascade(0, 0, 0, &[1, 2]);
        c.tweets[1].timestamp = -5;
        assert!(matches!(estimate_spreading_tree(&c, &g), Err(Error::CascadeOrder { .. })));
        let c = cascade(0, 0, 0, &[1, 99]);
        assert!(matches!(estimate_spreading_tree(&c, &g), Err(Error::UnknownUser(99))));
    }

    fn story(url: u64, cascades: &[&CascadeRecord]) -> UrlStory {
        UrlStory {
            url_id: UrlId(url),
            label: Label::FakeNews,
            first_seen: 0,
            cascade_ids: cascades.iter().map(|c| c.cascade_id).collect(),
        }
    }

    #[test]
    fn single_tweet_graph() {
        let g = social(&[(1, 0)], &[]);
        let c = cascade(0, 0, 0, &[1]);
        let s = story(0, &[&c]);
        let pg = build_propagation_graph(&s, &[&c], &g, Scope::CascadeWise, &FeatureSchema::standard()).unwrap();
        assert_eq!(pg.num_nodes(), 1);
        assert!(pg.edges.is_empty());
        assert_eq!(pg.node_features.cols(), 633);
    }

    #[test]
    fn two_tweets_follow_and_spread_merge() {
        let g = social(&[(1, 0), (2, 0)], &[(2, 1)]);
        let c = cascade(0, 0, 0, &[1, 2]);
        let s = story(0, &[&c]);
        let pg = build_propagation_graph(&s, &[&c], &g, Scope::UrlWise, &FeatureSchema::standard()).unwrap();
        pg.validate().unwrap();
        assert_eq!(pg.edges.len(), 1);
        let e = pg.edges[0];
        assert_eq!((e.i, e.j), (0, 1));
        assert_eq!(e.flags.to_array(), [0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn edge_feature_examples() {
        let g = social(&[(1, 0), (2, 0), (3, 0)], &[(1, 2), (2, 1), (3, 1)]);
        let c = cascade(0, 0, 0, &[1, 2]);
        let tree = estimate_spreading_tree(&c, &g).unwrap();
        let (a, b) = (&c.tweets[0], &c.tweets[1]);
        // mutual follow plus spread 0 -> 1
        assert_eq!(encode_edge_features(a, b, &g, &tree), [1.0, 1.0, 1.0, 0.0]);
        let empty = SpreadingTree::default();
        assert_eq!(encode_edge_features(a, b, &g, &empty), [1.0, 1.0, 0.0, 0.0]);
        // rule-2 spreading without a follow relation
        let g2 = social(&[(1, 0), (2, 0)], &[]);
        let tree2 = estimate_spreading_tree(&c, &g2).unwrap();
        assert_eq!(encode_edge_features(a, b, &g2, &tree2), [0.0, 0.0, 1.0, 0.0]);
        // j follows i and spread j -> i, seen from (i=retweet, j=source)
        let c3 = cascade(1, 0, 10, &[1, 3]);
        let tree3 = estimate_spreading_tree(&c3, &g).unwrap();
        assert_eq!(encode_edge_features(&c3.tweets[1], &c3.tweets[0], &g, &tree3), [1.0, 0.0, 0.0, 1.0]);
        assert_eq!(encode_edge_features(&c3.tweets[0], &c3.tweets[1], &g, &tree3), [0.0, 1.0, 1.0, 0.0]);
        // j follows i and the news spread j -> i
        let g4 = social(&[(1, 0), (3, 0)], &[(1, 3)]);
        let tree4 = estimate_spreading_tree(&c3, &g4).unwrap();
        assert_eq!(encode_edge_features(&c3.tweets[1], &c3.tweets[0], &g4, &tree4), [0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn cascade_scope_needs_one_cascade() {
        let g = social(&[(1, 0)], &[]);
        let a = cascade(0, 0, 0, &[1]);
        let b = cascade(1, 0, 5, &[1]);
        let s = story(0, &[&a, &b]);
        let r = build_propagation_graph(&s, &[&a, &b], &g, Scope::CascadeWise, &FeatureSchema::standard());
        assert!(r.is_err());
    }

    #[test]
    fn unknown_user_in_cascade() {
        let g = social(&[(1, 0)], &[]);
        let c = cascade(0, 0, 0, &[1, 7]);
        let s = story(0, &[&c]);
        let r = build_propagation_graph(&s, &[&c], &g, Scope::UrlWise, &FeatureSchema::standard());
        assert!(matches!(r, Err(Error::UnknownUser(7))));
    }
}
