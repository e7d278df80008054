//! Experimental protocols: folds, cross-validation, diffusion sweep,
//! aging, feature ablation, user-overlap distances and graph layout.

mod ablation;
mod aging;
mod cv;
mod distance;
mod folds;
mod layout;
pub mod report;
mod roc;
mod samples;

pub use ablation::{backward_feature_selection, AblationLevel, AblationReport};
pub use aging::{aging_protocol, make_windows, AgingConfig, AgingPlan, AgingReport, AgingSeries, TimeWindow};
pub use cv::{
    cross_validate, cross_validate_graphs, diffusion_sweep, mean_std, prepare, CvReport, FoldResult, ScoredSample,
    SweepPoint,
};
pub use distance::{diameter_estimate, mad_mmd, multi_source_bfs, OverlapDistances};
pub use folds::{FoldBalance, FoldPlan, FoldRound, Role};
pub use layout::{fr_layout, LayoutConfig, Position};
pub use report::{config_hash, write_json, CsvTable, Provenance};
pub use roc::{roc_auc, RocCurve};
pub use samples::{
    build_samples, coverage, filter_min_cascade_size, sample_units, HarnessConfig, DEFAULT_MIN_CASCADE_SIZE,
    FULL_DAY_HOURS,
};
