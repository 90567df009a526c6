//! Errors of the dataset/model formats and the pipelines built on them.

use std::path::PathBuf;

/// Errors from loading, saving, and validating the file formats, plus
/// the pipeline-level failures of cross-validation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(
        "unsupported schema in {path}: found format `{format}` version {version}, \
         expected `{expected_format}` version {expected_version}"
    )]
    SchemaVersionUnsupported {
        path: PathBuf,
        format: String,
        version: u32,
        expected_format: &'static str,
        expected_version: u32,
    },
    #[error("invalid record `{record_id}` at line {line}: {source}")]
    Validation {
        record_id: String,
        line: usize,
        #[source]
        source: hcrf_core::Error,
    },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("cross-validation needs at least 2 distinct subjects, found {found}")]
    InsufficientSubjects { found: usize },
    #[error("convert error at line {line}: {message}")]
    Convert { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] hcrf_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Curried constructor for [`Error::Io`].
pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
