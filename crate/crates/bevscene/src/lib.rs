//! File formats, dataset export and the `bevscene` command line on top of
//! [`bevscene_core`].
//!
//! * scene records: JSON lines, see [`records`]
//! * taxonomy: `label<TAB>static|dynamic` lines; grids: preset name or TOML
//! * samples: JSON lines of [`dataset::SampleRecord`] plus a `manifest.json`
//! * predictions: `sample_id<TAB>target tokens` lines
//! * majority model: versioned JSON, see [`model`]

pub mod cli;
pub mod config;
pub mod dataset;
mod error;
pub mod model;
pub mod pipeline;
pub mod predictions;
pub mod records;

pub use error::{Error, Result};
