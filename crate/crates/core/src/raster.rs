//! Area matrices: per-cell label sets around the ego vehicle.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::to_ego_frame;
use crate::grid::{assign_cell, CellIndex, GridSpec};
use crate::scene::Scene;
use crate::taxonomy::{LabelId, Taxonomy, EGO_LABEL};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RasterError {
    #[error("label {0:?} is not in the taxonomy")]
    UnknownLabel(String),
}

/// The object types present in one cell, distinct and in canonical order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelSet(Vec<LabelId>);

impl LabelSet {
    pub const fn new() -> Self {
        LabelSet(Vec::new())
    }

    pub fn insert(&mut self, id: LabelId) -> bool {
        match self.0.binary_search(&id) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, id);
                true
            }
        }
    }

    pub fn remove(&mut self, id: LabelId) -> bool {
        match self.0.binary_search(&id) {
            Ok(pos) => {
                self.0.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn contains(&self, id: LabelId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = LabelId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[LabelId] {
        &self.0
    }

    pub fn names<'t>(&self, taxonomy: &'t Taxonomy) -> Vec<&'t str> {
        self.iter().map(|id| taxonomy.name(id)).collect()
    }
}

impl FromIterator<LabelId> for LabelSet {
    fn from_iter<I: IntoIterator<Item = LabelId>>(iter: I) -> Self {
        let mut ids: Vec<LabelId> = iter.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        LabelSet(ids)
    }
}

impl Extend<LabelId> for LabelSet {
    fn extend<I: IntoIterator<Item = LabelId>>(&mut self, iter: I) {
        for id in iter {
            self.insert(id);
        }
    }
}

/// `rows x cols` grid of label sets, stored row-major from cell `(1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaMatrix {
    grid: GridSpec,
    cells: Vec<LabelSet>,
}

impl AreaMatrix {
    pub fn empty(grid: GridSpec) -> Self {
        AreaMatrix { grid, cells: vec![LabelSet::new(); grid.cell_count()] }
    }

    /// Builds a matrix from row-major cells; `None` if the count does not match the grid.
    pub fn from_cells(grid: GridSpec, cells: Vec<LabelSet>) -> Option<Self> {
        (cells.len() == grid.cell_count()).then_some(AreaMatrix { grid, cells })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn get(&self, cell: CellIndex) -> &LabelSet {
        &self.cells[self.grid.offset(cell)]
    }

    pub fn get_mut(&mut self, cell: CellIndex) -> &mut LabelSet {
        let offset = self.grid.offset(cell);
        &mut self.cells[offset]
    }

    pub fn insert(&mut self, cell: CellIndex, id: LabelId) -> bool {
        self.get_mut(cell).insert(id)
    }

    /// Cells with their coordinates, row-major.
    pub fn iter(&self) -> impl Iterator<Item = (CellIndex, &LabelSet)> + '_ {
        self.grid.cells().zip(self.cells.iter())
    }

    pub fn cells(&self) -> &[LabelSet] {
        &self.cells
    }

    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_empty()).count()
    }
}

/// Bins a scene's objects into the grid around its ego pose. Objects outside
/// the extent are dropped and the ego vehicle is added at its own cell.
pub fn rasterize(
    scene: &Scene,
    grid: &GridSpec,
    taxonomy: &Taxonomy,
) -> Result<AreaMatrix, RasterError> {
    let mut matrix = AreaMatrix::empty(*grid);
    for object in &scene.objects {
        let id = taxonomy
            .id(&object.label)
            .ok_or_else(|| RasterError::UnknownLabel(object.label.clone()))?;
        if let Some(cell) = assign_cell(to_ego_frame((object.x, object.y), &scene.ego), grid) {
            matrix.insert(cell, id);
        }
    }
    if let Some(cell) = grid.origin_cell() {
        let ego = taxonomy
            .id(EGO_LABEL)
            .ok_or_else(|| RasterError::UnknownLabel(EGO_LABEL.into()))?;
        matrix.insert(cell, ego);
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EgoPose;
    use crate::scene::SceneObject;
    use alloc::string::ToString;

    fn scene(objects: Vec<(&str, f64, f64)>, heading: f64) -> Scene {
        Scene {
            scene_id: "s".into(),
            sequence_id: "q".into(),
            timestamp_us: 0,
            country: "US".into(),
            ego: EgoPose::new(0.0, 0.0, heading).unwrap(),
            objects: objects
                .into_iter()
                .enumerate()
                .map(|(i, (label, x, y))| SceneObject {
                    id: i.to_string(),
                    label: label.into(),
                    x,
                    y,
                })
                .collect(),
            prev: None,
            next: None,
        }
    }

    #[test]
    fn empty_scene_has_only_ego() {
        let t = Taxonomy::default();
        let m = rasterize(&scene(vec![], 0.0), &GridSpec::DEFAULT_20X11, &t).unwrap();
        assert_eq!(m.occupied(), 1);
        assert_eq!(m.get(CellIndex::new(6, 6)).names(&t), ["ego car"]);
    }

    #[test]
    fn car_ahead_lands_in_row_11() {
        let t = Taxonomy::default();
        let m = rasterize(&scene(vec![("car", 10.0, 0.0)], 0.0), &GridSpec::DEFAULT_20X11, &t)
            .unwrap();
        assert_eq!(m.get(CellIndex::new(11, 6)).names(&t), ["car"]);
    }

    #[test]
    fn duplicates_collapse_and_order_is_canonical() {
        let t = Taxonomy::default();
        let s = scene(
            vec![("adult", 0.5, 0.2), ("adult", 0.7, -0.3), ("car", 0.1, 0.0), ("lane", 1.0, 0.0)],
            0.0,
        );
        let m = rasterize(&s, &GridSpec::DEFAULT_20X11, &t).unwrap();
        assert_eq!(m.get(CellIndex::new(6, 6)).names(&t), ["lane", "adult", "car", "ego car"]);
    }

    #[test]
    fn out_of_range_dropped_and_unknown_rejected() {
        let t = Taxonomy::default();
        let m = rasterize(&scene(vec![("car", 100.0, 0.0)], 0.0), &GridSpec::DEFAULT_20X11, &t)
            .unwrap();
        assert_eq!(m.occupied(), 1);
        let err = rasterize(&scene(vec![("hovercraft", 0.0, 0.0)], 0.0), &GridSpec::DEFAULT_20X11, &t);
        assert_eq!(err, Err(RasterError::UnknownLabel("hovercraft".into())));
    }

    #[test]
    fn label_set_semantics() {
        let t = Taxonomy::default();
        let car = t.id("car").unwrap();
        let lane = t.id("lane").unwrap();
        let mut set: LabelSet = [car, lane, car].into_iter().collect();
        assert_eq!(set.as_slice(), [lane, car]);
        assert!(!set.insert(car));
        assert!(set.remove(car));
        assert!(!set.contains(car));
    }
}
