//! Core of a hidden-state chain model for joint activity and action
//! sequence labeling.
//!
//! A sequence of `K` observed feature vectors is labeled with one
//! sequence-level *activity*, one *action* per segment, and one *latent*
//! sub-state per segment. The model scores a complete labeling with five
//! additive potentials (observation, action-latent bias, joint-state
//! transition, action-pair/activity compatibility, and a global-feature
//! term) and is decoded exactly: collapsing `(action, latent)` into a
//! product state turns the loopy structure into a linear chain, so the
//! global argmax over all `N_A * (N_y * N_z)^K` labelings is found by
//! dynamic programming in `O(N_y^2 N_z^2 N_A K)`.
//!
//! Parameters are learned with a latent max-margin objective: a
//! concave-convex outer loop alternates latent completion with a
//! structured SVM solved by a 1-slack cutting-plane method over averaged
//! most-violated constraints.
//!
//! This crate is `no_std`-compatible (requires `alloc`); the companion
//! `hcrf` crate carries file formats, dataset tooling, and the CLI.
//!
//! # Features
//!
//! - `std` (default): wall-clock timing in training logs, `std` errors.
//! - `parallel`: rayon parallelism for per-example decodes, k-means
//!   restarts, and batch prediction. Results are bitwise identical with
//!   and without it.
//! - `serde`: serialization derives on domain types.
//! - `libm`: float math for `no_std` builds.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("hcrf-core requires either the `std` or the `libm` feature");

pub mod error;
pub mod inference;
pub mod init;
pub mod learning;
pub mod metrics;
pub mod potentials;
pub mod preprocess;
pub mod sequence;
pub mod space;
mod util;
pub mod weights;

pub use error::{Error, Result};
pub use inference::{
    brute_force_decode, complete_latent, decode, decode_loss_augmented, DecodeResult, DpTable,
    LossAugment, BRUTE_FORCE_CAP,
};
pub use init::{
    init_kmeans_categorical, init_kmeans_features, init_random, kmeans, CategoryLabels,
    KmeansResult,
};
pub use learning::{
    loss_delta, qp_solve, solve_structured_svm, surrogate_objective, train, ConstraintRow,
    ConstraintSet, LogRecord, SvmOutcome, TrainReport,
};
pub use metrics::{evaluate, ClassMetrics, MetricsReport};
pub use potentials::{
    joint_feature_map, joint_score, score_global, score_node, score_transition, JointAssignment,
};
pub use preprocess::{uniform_segmentation, Standardizer};
pub use sequence::{validate_sequence, SegmentSequence};
pub use space::{Hyperparams, InitStrategy, LabelSpace};
pub use weights::WeightPack;
