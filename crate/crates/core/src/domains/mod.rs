//! Clustering-based domain split of a scene corpus.

mod features;
mod kmeans;
mod pca;
mod split;

use thiserror::Error;

pub use features::{extract_features, FeatureVector, PathShape, FEATURE_COUNT, FEATURE_NAMES};
pub use kmeans::{kmeans, KMeansResult, MAX_ITERATIONS};
pub use pca::{pca_reduce, Pca, PcaResult};
pub use split::{
    build_split, emit_domain_scatter, DomainSplit, Partition, ScatterRow, SplitConfig, SplitOutput,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("scene {0}: no centerlines")]
    NoCenterlines(String),
    #[error("scene {0}: fewer than 2 observed points")]
    ShortHistory(String),
    #[error("scene {0}: {1}")]
    Scene(String, String),
    #[error("need at least {need} rows, got {got}")]
    TooFewRows { got: usize, need: usize },
    #[error("need at least k = {k} points, got {points}")]
    TooFewPoints { points: usize, k: usize },
    #[error("bad matrix: {0}")]
    BadMatrix(String),
    #[error("clustering produced empty domains; cluster sizes {0:?}")]
    EmptyClusters(Vec<usize>),
    #[error("duplicate scene id {0}")]
    DuplicateScene(String),
    #[error("inconsistent split: {0}")]
    Inconsistent(String),
}
