//! Domain types, propagation-graph construction, feature encoding,
//! truncation and credibility scoring.

mod credibility;
mod embeddings;
mod features;
mod io;
mod propagation;
mod truncate;
mod types;

pub use credibility::{credibility_from_counts, CredibilityIndex};
pub use embeddings::WordVectors;
pub use features::{
    category_bucket, encode_node_features, FeatureGroup, FeatureSchema, FeatureSlice, CATEGORY_BUCKETS,
};
pub use io::{read_dataset, read_jsonl, write_dataset, write_jsonl, CASCADES_FILE, FOLLOWS_FILE, URLS_FILE, USERS_FILE};
pub use propagation::{
    build_propagation_graph, edge_flags, encode_edge_features, estimate_spreading_tree, Edge, EdgeFlags,
    PropagationGraph, Scope, SpreadingTree,
};
pub use truncate::{truncate_cascade, truncate_story};
pub use types::{
    CascadeId, CascadeRecord, Dataset, Label, SocialGraph, Timestamp, Tweet, TweetId, UrlId, UrlStory, User, UserId,
    EMBEDDING_DIM, SECONDS_PER_DAY, SECONDS_PER_HOUR,
};

#[cfg(test)]
pub(crate) use propagation::tests as fixtures;
