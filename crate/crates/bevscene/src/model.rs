//! Versioned JSON file for the cell-frequency (majority) model.

use std::fs;
use std::path::Path;

use bevscene_core::{CellFrequencyModel, CellIndex, GridSpec, LabelSet, Taxonomy};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

pub const MODEL_FORMAT: &str = "bevscene-majority";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    grid: GridSpec,
    taxonomy_fingerprint: String,
    cells: Vec<CellCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellCounts {
    row: usize,
    col: usize,
    counts: Vec<SetCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetCount {
    labels: Vec<String>,
    count: u64,
}

pub fn render_model(model: &CellFrequencyModel, taxonomy: &Taxonomy) -> String {
    let grid = *model.grid();
    let cells = grid
        .cells()
        .map(|cell| CellCounts {
            row: cell.row,
            col: cell.col,
            counts: model
                .counts(cell)
                .iter()
                .map(|(set, &count)| SetCount {
                    labels: set.names(taxonomy).into_iter().map(String::from).collect(),
                    count,
                })
                .collect(),
        })
        .collect();
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        grid,
        taxonomy_fingerprint: taxonomy.fingerprint(),
        cells,
    };
    serde_json::to_string_pretty(&file).expect("model serializes") + "\n"
}

pub fn parse_model(text: &str, taxonomy: &Taxonomy) -> Result<CellFrequencyModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("model file: {e}")))?;
    if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
        return Err(Error::Invalid(format!(
            "model file is {} v{}, expected {MODEL_FORMAT} v{MODEL_VERSION}",
            file.format, file.version
        )));
    }
    if file.taxonomy_fingerprint != taxonomy.fingerprint() {
        return Err(Error::Invalid("model was fitted with a different taxonomy".into()));
    }
    file.grid.validate()?;
    let mut model = CellFrequencyModel::new(file.grid);
    for cell in file.cells {
        for entry in cell.counts {
            let set = entry
                .labels
                .iter()
                .map(|l| taxonomy.id(l).ok_or_else(|| Error::Invalid(format!("model file: unknown label {l:?}"))))
                .collect::<Result<LabelSet>>()?;
            model.add_count(CellIndex::new(cell.row, cell.col), set, entry.count)?;
        }
    }
    Ok(model)
}

pub fn save_model(path: &Path, model: &CellFrequencyModel, taxonomy: &Taxonomy) -> Result<()> {
    fs::write(path, render_model(model, taxonomy)).at(path)
}

pub fn load_model(path: &Path, taxonomy: &Taxonomy) -> Result<CellFrequencyModel> {
    parse_model(&fs::read_to_string(path).at(path)?, taxonomy)
}
