//! Seeded synthetic corpus: follow graph, labelled stories and cascades.

mod cascades;
mod config;
mod social;
mod stats;

pub use cascades::{generate, generate_dataset, SizeLaw};
pub use config::{CommunityFractions, EmbeddingMode, GenConfig};
pub use social::{generate_social_graph, Community, SyntheticSocial};
pub use stats::{summary_stats, SummaryStats, COVERAGE_HOURS};
