//! Taxonomy, grid and generator configuration files.

use std::fs;
use std::path::Path;

use bevscene_core::{GridSpec, SynthConfig, Taxonomy};

use crate::error::{Error, IoContext, Result};

/// The built-in taxonomy, or one read from a `label<TAB>static|dynamic` file.
pub fn load_taxonomy(path: Option<&Path>) -> Result<Taxonomy> {
    match path {
        None => Ok(Taxonomy::default()),
        Some(p) => Ok(Taxonomy::parse(&fs::read_to_string(p).at(p)?)?),
    }
}

/// A preset name (`default-20x11`, `ablation-8x5`) or a TOML file whose keys
/// are the [`GridSpec`] field names.
pub fn load_grid(spec: &str) -> Result<GridSpec> {
    if let Ok(grid) = GridSpec::preset(spec) {
        return Ok(grid);
    }
    let path = Path::new(spec);
    if !path.exists() {
        let names: Vec<&str> = GridSpec::PRESETS.iter().map(|(n, _)| *n).collect();
        return Err(Error::Invalid(format!(
            "grid {spec:?} is neither a preset ({}) nor a file",
            names.join(", ")
        )));
    }
    let grid: GridSpec = toml::from_str(&fs::read_to_string(path).at(path)?)
        .map_err(|e| Error::File { path: path.into(), msg: e.to_string() })?;
    grid.validate()?;
    Ok(grid)
}

pub fn load_synth_config(path: Option<&Path>) -> Result<SynthConfig> {
    match path {
        None => Ok(SynthConfig::default()),
        Some(p) => toml::from_str(&fs::read_to_string(p).at(p)?)
            .map_err(|e| Error::File { path: p.into(), msg: e.to_string() }),
    }
}
