//! Dataset tooling, file formats, cross-validation, and reporting around
//! [`hcrf_core`]: the std companion of the no_std-compatible model core.
//!
//! - [`dataset`]: the line-delimited JSON dataset format and the
//!   side-channel categorical-label format.
//! - [`model`]: the versioned model container (label space, flattened
//!   weights, standardizer, name tables).
//! - [`synth`]: a synthetic-data generator whose process is exactly
//!   representable by the model family.
//! - [`convert`]: converter from per-segment CSV feature tables.
//! - [`cv`]: leave-one-subject-out cross-validation.
//! - [`report`]: text/JSON/CSV rendering of metric reports.
//!
//! The `hcrf` binary wires these into the `train`, `predict`, `eval`,
//! `cv`, `synth`, and `inspect` subcommands.

pub mod convert;
pub mod cv;
pub mod dataset;
pub mod error;
pub mod model;
pub mod report;
pub mod synth;

pub use convert::convert_feature_table;
pub use cv::{cross_validate, CvReport, FoldReport, MetricSummary, SummaryBlock};
pub use dataset::{CategoryFile, DatasetFile, DatasetHeader};
pub use error::{Error, Result};
pub use model::ModelFile;
pub use synth::{synth_generate, SyntheticSpec};

pub use hcrf_core as core;
