//! Pointwise learning profiles computed from logged checkpoint predictions.
//!
//! A run log records the softmax outputs of a sequence of checkpoints over
//! a fixed set of labelled points. From a collection of runs this crate
//! derives, for every point, how its accuracy, softmax distribution and
//! prediction entropy evolve as a function of the models' global accuracy;
//! scores and classifies those profiles; compares training procedures; and
//! builds class-balanced subsets whose accuracy moves against the global
//! accuracy. The [`theory`] module holds simulators of abstract learning
//! models together with checks of their monotonicity properties.

pub mod logstore;
pub mod negset;
pub mod profile;
pub mod scoring;
pub mod similarity;
pub mod theory;

use thiserror::Error;

pub use logstore::{load_log, merge_runs, save_log, Checkpoint, RunCollection, RunLog, SoftmaxMatrix};
pub use profile::{AccuracyGrid, ProfileCurve, ProfileKind, Profiler, Smoothing, SoftmaxProfile};
pub use scoring::{classify, decompose, nmono, Taxon, TaxonomyConfig, TaxonomyLabel};

/// Any error raised by the library, tagged with the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("logstore: {0}")]
    Log(#[from] logstore::LogError),
    #[error("profile: {0}")]
    Profile(#[from] profile::ProfileError),
    #[error("scoring: {0}")]
    Scoring(#[from] scoring::ScoringError),
    #[error("similarity: {0}")]
    Similarity(#[from] similarity::SimilarityError),
    #[error("negset: {0}")]
    NegSet(#[from] negset::NegSetError),
    #[error("theory: {0}")]
    Theory(#[from] theory::TheoryError),
}
