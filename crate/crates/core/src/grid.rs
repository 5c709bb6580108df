//! Grid geometry and the point-to-cell membership rule.
//!
//! Rows run rear to front (row 1 is rearmost), columns run left to right
//! (column 1 is leftmost). Cells are half-open; only the outer front edge and
//! the outer right edge of the grid are closed, so cells tile the extent.

use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::EgoPoint;

const EXTENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid must have at least one row and one column")]
    ZeroDimension,
    #[error("cell sizes and extents must be positive and finite")]
    NonPositive,
    #[error("{rows} rows x {cell_h} m do not span front {front_m} m + rear {rear_m} m")]
    LongitudinalMismatch { rows: usize, cell_h: f64, front_m: f64, rear_m: f64 },
    #[error("{cols} cols x {cell_w} m do not span left {left_m} m + right {right_m} m")]
    LateralMismatch { cols: usize, cell_w: f64, left_m: f64, right_m: f64 },
    #[error("unknown grid preset {0:?}")]
    UnknownPreset(alloc::string::String),
}

/// Discretization of the area around the ego vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Longitudinal cell size, meters.
    pub cell_h: f64,
    /// Lateral cell size, meters.
    pub cell_w: f64,
    pub front_m: f64,
    pub rear_m: f64,
    pub left_m: f64,
    pub right_m: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::DEFAULT_20X11
    }
}

impl GridSpec {
    /// 20 x 11 cells of 2 m, 30 m ahead, 10 m behind, 11 m each side.
    pub const DEFAULT_20X11: GridSpec = GridSpec {
        rows: 20,
        cols: 11,
        cell_h: 2.0,
        cell_w: 2.0,
        front_m: 30.0,
        rear_m: 10.0,
        left_m: 11.0,
        right_m: 11.0,
    };

    /// 8 x 5 cells of 5 m, 30 m ahead, 10 m behind, 12.5 m each side.
    pub const ABLATION_8X5: GridSpec = GridSpec {
        rows: 8,
        cols: 5,
        cell_h: 5.0,
        cell_w: 5.0,
        front_m: 30.0,
        rear_m: 10.0,
        left_m: 12.5,
        right_m: 12.5,
    };

    pub const PRESETS: [(&'static str, GridSpec); 2] =
        [("default-20x11", Self::DEFAULT_20X11), ("ablation-8x5", Self::ABLATION_8X5)];

    pub fn preset(name: &str) -> Result<GridSpec, GridError> {
        Self::PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, g)| *g)
            .ok_or_else(|| GridError::UnknownPreset(name.into()))
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(GridError::ZeroDimension);
        }
        let lengths = [self.cell_h, self.cell_w];
        let extents = [self.front_m, self.rear_m, self.left_m, self.right_m];
        if lengths.iter().any(|v| !v.is_finite() || *v <= 0.0)
            || extents.iter().any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(GridError::NonPositive);
        }
        let span = self.rows as f64 * self.cell_h - (self.front_m + self.rear_m);
        if !(-EXTENT_TOLERANCE..=EXTENT_TOLERANCE).contains(&span) {
            return Err(GridError::LongitudinalMismatch {
                rows: self.rows,
                cell_h: self.cell_h,
                front_m: self.front_m,
                rear_m: self.rear_m,
            });
        }
        let span = self.cols as f64 * self.cell_w - (self.left_m + self.right_m);
        if !(-EXTENT_TOLERANCE..=EXTENT_TOLERANCE).contains(&span) {
            return Err(GridError::LateralMismatch {
                cols: self.cols,
                cell_w: self.cell_w,
                left_m: self.left_m,
                right_m: self.right_m,
            });
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Longitudinal bounds `[lo, hi)` of a 1-based row.
    pub fn row_bounds(&self, row: usize) -> (f64, f64) {
        (
            -self.rear_m + (row - 1) as f64 * self.cell_h,
            -self.rear_m + row as f64 * self.cell_h,
        )
    }

    /// Bounds `[lo, hi)` of a 1-based column on the rightward axis (`-lat`).
    pub fn col_bounds(&self, col: usize) -> (f64, f64) {
        (
            -self.left_m + (col - 1) as f64 * self.cell_w,
            -self.left_m + col as f64 * self.cell_w,
        )
    }

    pub fn cell_center(&self, cell: CellIndex) -> EgoPoint {
        let (r0, r1) = self.row_bounds(cell.row);
        let (c0, c1) = self.col_bounds(cell.col);
        EgoPoint { lon: 0.5 * (r0 + r1), lat: -0.5 * (c0 + c1) }
    }

    /// Cell holding the ego position, if the grid covers it.
    pub fn origin_cell(&self) -> Option<CellIndex> {
        assign_cell(EgoPoint::new(0.0, 0.0), self)
    }

    /// All cells, row-major from `(1, 1)`.
    pub fn cells(&self) -> impl Iterator<Item = CellIndex> {
        let cols = self.cols;
        (1..=self.rows).flat_map(move |row| (1..=cols).map(move |col| CellIndex { row, col }))
    }

    /// Row-major position of a cell.
    pub fn offset(&self, cell: CellIndex) -> usize {
        (cell.row - 1) * self.cols + (cell.col - 1)
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        (1..=self.rows).contains(&cell.row) && (1..=self.cols).contains(&cell.col)
    }
}

/// 1-based `(row, col)` cell coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

impl CellIndex {
    pub const fn new(row: usize, col: usize) -> Self {
        CellIndex { row, col }
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Index of the half-open interval containing `v`, with the last interval
/// closed. Starts from the arithmetic estimate and nudges it so the result
/// agrees with the interval bounds exactly as `bounds` computes them.
fn bin(v: f64, count: usize, bounds: impl Fn(usize) -> (f64, f64)) -> Option<usize> {
    let (lo, _) = bounds(1);
    let (_, hi) = bounds(count);
    if !(v >= lo && v <= hi) {
        return None;
    }
    let (_, first_hi) = bounds(1);
    let size = first_hi - lo;
    let estimate = libm::floor((v - lo) / size);
    let mut i = if estimate < 0.0 { 1 } else { (estimate as usize + 1).min(count) };
    loop {
        let (l, h) = bounds(i);
        if v < l && i > 1 {
            i -= 1;
        } else if v >= h && i < count {
            i += 1;
        } else {
            return Some(i);
        }
    }
}

/// Places an ego-frame point in its cell, or `None` outside the grid extent.
pub fn assign_cell(p: EgoPoint, grid: &GridSpec) -> Option<CellIndex> {
    if !(p.lat.is_finite() && p.lon.is_finite()) {
        return None;
    }
    let row = bin(p.lon, grid.rows, |i| grid.row_bounds(i))?;
    let col = bin(-p.lat, grid.cols, |j| grid.col_bounds(j))?;
    Some(CellIndex { row, col })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_consistent() {
        GridSpec::DEFAULT_20X11.validate().unwrap();
        GridSpec::ABLATION_8X5.validate().unwrap();
        assert_eq!(GridSpec::preset("ablation-8x5").unwrap(), GridSpec::ABLATION_8X5);
        assert!(GridSpec::preset("huge").is_err());
    }

    #[test]
    fn inconsistent_extents_rejected() {
        let wide = GridSpec { left_m: 12.0, right_m: 12.0, ..GridSpec::DEFAULT_20X11 };
        assert!(matches!(wide.validate(), Err(GridError::LateralMismatch { .. })));
        let prose = GridSpec { cols: 12, ..wide };
        prose.validate().unwrap();
        let zero = GridSpec { rows: 0, ..GridSpec::DEFAULT_20X11 };
        assert_eq!(zero.validate(), Err(GridError::ZeroDimension));
    }

    #[test]
    fn origin_is_row_6_col_6() {
        let g = GridSpec::DEFAULT_20X11;
        assert_eq!(assign_cell(EgoPoint::new(0.0, 0.0), &g), Some(CellIndex::new(6, 6)));
        assert_eq!(g.origin_cell(), Some(CellIndex::new(6, 6)));
        assert_eq!(assign_cell(EgoPoint::new(0.0, 100.0), &g), None);
        assert_eq!(assign_cell(EgoPoint::new(0.0, 10.0), &g), Some(CellIndex::new(11, 6)));
    }

    #[test]
    fn outer_edges() {
        let g = GridSpec::DEFAULT_20X11;
        // rear-left corner is inside, front-right corner is closed
        assert_eq!(assign_cell(EgoPoint::new(11.0, -10.0), &g), Some(CellIndex::new(1, 1)));
        assert_eq!(assign_cell(EgoPoint::new(-11.0, 30.0), &g), Some(CellIndex::new(20, 11)));
        assert_eq!(assign_cell(EgoPoint::new(0.0, -10.000001), &g), None);
        assert_eq!(assign_cell(EgoPoint::new(11.000001, 0.0), &g), None);
        assert_eq!(assign_cell(EgoPoint::new(f64::NAN, 0.0), &g), None);
        // interior boundary goes to the upper cell
        assert_eq!(assign_cell(EgoPoint::new(0.0, 2.0), &g), Some(CellIndex::new(7, 6)));
        // lateral boundaries belong to the column on their right
        assert_eq!(assign_cell(EgoPoint::new(1.0, 0.0), &g), Some(CellIndex::new(6, 6)));
        assert_eq!(assign_cell(EgoPoint::new(-1.0, 0.0), &g), Some(CellIndex::new(6, 7)));
    }

    #[test]
    fn centers_round_trip() {
        let g = GridSpec::ABLATION_8X5;
        for cell in g.cells() {
            assert_eq!(assign_cell(g.cell_center(cell), &g), Some(cell));
        }
        assert_eq!(g.cells().count(), 40);
        assert_eq!(g.offset(CellIndex::new(2, 1)), 5);
    }
}
