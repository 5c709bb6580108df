use std::io;
use std::path::PathBuf;

use bevscene_core::{
    BaselineError, CodecError, GridError, MaskError, MetricsError, PairError, SceneError,
    SplitError, SynthError, TaxonomyError,
};
use thiserror::Error;

use crate::records::RecordError;

/// Everything that can go wrong reading, transforming or writing data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {source}", path.display())]
    Record { path: PathBuf, line: usize, source: RecordError },
    #[error("{}:{line}: {msg}", path.display())]
    Line { path: PathBuf, line: usize, msg: String },
    #[error("{}: {msg}", path.display())]
    File { path: PathBuf, msg: String },
    #[error("taxonomy: {0}")]
    Taxonomy(#[from] TaxonomyError),
    #[error("grid: {0}")]
    Grid(#[from] GridError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error("masking: {0}")]
    Mask(#[from] MaskError),
    #[error("codec: {0}")]
    Codec(#[from] CodecError),
    #[error("split: {0}")]
    Split(#[from] SplitError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("baseline: {0}")]
    Baseline(#[from] BaselineError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io { path: path.into(), source })
    }
}
