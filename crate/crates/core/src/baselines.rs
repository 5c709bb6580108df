//! Non-learned reference predictors.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::codec::SpanTargets;
use crate::geometry::{rotate, EgoPoint};
use crate::grid::{assign_cell, CellIndex, GridSpec};
use crate::masking::MaskPlan;
use crate::raster::{AreaMatrix, LabelSet};
use crate::scene::PairMeta;
use crate::taxonomy::{Taxonomy, EGO_LABEL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("model has no observations for cell {0}")]
    UnfittedModel(CellIndex),
    #[error("training split is empty")]
    EmptyTrainingSplit,
    #[error("matrix grid does not match the model grid")]
    GridMismatch,
    #[error("cell {0} lies outside the model grid")]
    CellOutOfRange(CellIndex),
}

/// Counts of the label sets seen at every cell position.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFrequencyModel {
    grid: GridSpec,
    cells: Vec<BTreeMap<LabelSet, u64>>,
}

impl CellFrequencyModel {
    pub fn new(grid: GridSpec) -> Self {
        CellFrequencyModel { grid, cells: alloc::vec![BTreeMap::new(); grid.cell_count()] }
    }

    /// Counts every cell of every matrix.
    pub fn fit<'a>(
        grid: GridSpec,
        matrices: impl IntoIterator<Item = &'a AreaMatrix>,
    ) -> Result<Self, BaselineError> {
        let mut model = CellFrequencyModel::new(grid);
        let mut seen = false;
        for matrix in matrices {
            model.observe(matrix)?;
            seen = true;
        }
        if !seen {
            return Err(BaselineError::EmptyTrainingSplit);
        }
        Ok(model)
    }

    pub fn observe(&mut self, matrix: &AreaMatrix) -> Result<(), BaselineError> {
        if *matrix.grid() != self.grid {
            return Err(BaselineError::GridMismatch);
        }
        for (counts, labels) in self.cells.iter_mut().zip(matrix.cells()) {
            *counts.entry(labels.clone()).or_insert(0) += 1;
        }
        Ok(())
    }

    pub fn add_count(&mut self, cell: CellIndex, labels: LabelSet, count: u64) -> Result<(), BaselineError> {
        if !self.grid.contains(cell) {
            return Err(BaselineError::CellOutOfRange(cell));
        }
        let offset = self.grid.offset(cell);
        *self.cells[offset].entry(labels).or_insert(0) += count;
        Ok(())
    }

    /// Adds another model's counts (sharded fitting).
    pub fn merge(&mut self, other: &CellFrequencyModel) -> Result<(), BaselineError> {
        if other.grid != self.grid {
            return Err(BaselineError::GridMismatch);
        }
        for (mine, theirs) in self.cells.iter_mut().zip(&other.cells) {
            for (set, n) in theirs {
                *mine.entry(set.clone()).or_insert(0) += n;
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn counts(&self, cell: CellIndex) -> &BTreeMap<LabelSet, u64> {
        &self.cells[self.grid.offset(cell)]
    }

    /// Most frequent label set at `cell`; ties go to the set with fewer labels,
    /// then to the lexicographically smaller label list.
    pub fn majority(&self, cell: CellIndex, taxonomy: &Taxonomy) -> Result<LabelSet, BaselineError> {
        if !self.grid.contains(cell) {
            return Err(BaselineError::CellOutOfRange(cell));
        }
        self.counts(cell)
            .iter()
            .max_by(|(a, na), (b, nb)| {
                na.cmp(nb).then_with(|| canonical_order(b, a, taxonomy))
            })
            .map(|(set, _)| set.clone())
            .ok_or(BaselineError::UnfittedModel(cell))
    }

    /// One span per sentinel of the plan, in sentinel order.
    pub fn predict(&self, plan: &MaskPlan, taxonomy: &Taxonomy) -> Result<SpanTargets, BaselineError> {
        plan.slots()
            .map(|(_, cell)| self.majority(cell, taxonomy))
            .collect::<Result<Vec<_>, _>>()
            .map(SpanTargets::new)
    }
}

fn canonical_order(a: &LabelSet, b: &LabelSet, taxonomy: &Taxonomy) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.names(taxonomy).cmp(&b.names(taxonomy)))
}

/// Predicts the next matrix by carrying every occupant of `current` along the
/// inverse ego motion: each occupied cell's center is rotated by the negated
/// heading change, shifted back by the travelled distance along the new
/// forward axis, and re-binned into `grid`. The ego vehicle is placed back at
/// the origin cell.
pub fn persistence_predict(
    current: &AreaMatrix,
    meta: &PairMeta,
    grid: &GridSpec,
    taxonomy: &Taxonomy,
) -> AreaMatrix {
    let ego = taxonomy.id(EGO_LABEL);
    let mut next = AreaMatrix::empty(*grid);
    for (cell, labels) in current.iter() {
        if labels.iter().all(|id| Some(id) == ego) {
            continue;
        }
        let center = current.grid().cell_center(cell);
        let (lon, lat) = rotate(center.lon, center.lat, -meta.orientation_diff_deg);
        let moved = EgoPoint { lat, lon: lon - meta.dist_m };
        if let Some(target) = assign_cell(moved, grid) {
            next.get_mut(target).extend(labels.iter().filter(|id| Some(*id) != ego));
        }
    }
    if let (Some(ego), Some(origin)) = (ego, grid.origin_cell()) {
        next.insert(origin, ego);
    }
    next
}
