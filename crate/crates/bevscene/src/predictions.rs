//! Predictions files: one `sample_id<TAB>target tokens` line per sample.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, IoContext, Result};

pub fn write_predictions<'a>(path: &Path, rows: impl IntoIterator<Item = (&'a str, String)>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path).at(path)?);
    for (id, target) in rows {
        writeln!(out, "{id}\t{target}").at(path)?;
    }
    out.flush().at(path)
}

/// Reads a predictions file into `sample_id -> target text`. A sample id may
/// appear once; blank lines are skipped.
pub fn read_predictions(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).at(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Line { path: path.into(), line: i + 1, msg };
        let (id, target) = line.split_once('\t').ok_or_else(|| err("expected sample_id<TAB>target".into()))?;
        if out.insert(id.to_string(), target.to_string()).is_some() {
            return Err(err(format!("duplicate sample id {id:?}")));
        }
    }
    Ok(out)
}
