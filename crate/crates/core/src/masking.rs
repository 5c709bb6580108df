//! Masked-span task construction over serialized scene pairs.
//!
//! Two tasks are built from a pair `(A_T, A_T+1)`:
//!
//! * scene-object prediction: a few random cells of each scene are replaced
//!   by sentinels and the target lists their contents;
//! * next-scene prediction: scene `T` is shown in full, every central cell of
//!   scene `T+1` is replaced by a sentinel and its margin is blanked to `<empty>`.
//!
//! Masking is confined to a centered region small enough that a scene's
//! sentinels plus the final target sentinel fit the 100-token vocabulary.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{
    CellSlot, CodecError, PairSide, SceneCodec, SpanTargets, Token, TokenSequence, MAX_SENTINELS,
};
use crate::grid::{CellIndex, GridError, GridSpec};
use crate::raster::{rasterize, AreaMatrix, LabelSet, RasterError};
use crate::scene::{pair_metadata, LinkedSequence, PairMeta, Scene, SceneError};
use crate::taxonomy::Taxonomy;

/// Most cells a region may hold: one sentinel is reserved for the target's end.
pub const MAX_REGION_CELLS: usize = MAX_SENTINELS - 1;

/// Cells masked per scene in the scene-object task.
pub const DEFAULT_CELLS_PER_SCENE: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaskError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("a {rows}x{cols} region does not fit centered in a {grid_rows}x{grid_cols} grid")]
    GridTooSmall { rows: usize, cols: usize, grid_rows: usize, grid_cols: usize },
    #[error("central region has {available} cells, {needed} needed per scene")]
    RegionTooSmall { available: usize, needed: usize },
    #[error("{0} sentinels exceed the vocabulary")]
    SentinelBudget(usize),
    #[error("pair {0}: matrices do not match the task grid")]
    GridMismatch(String),
    #[error("target has no span for sentinel <extra_id_{0}>")]
    MissingSpan(u8),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskTask {
    SceneObject,
    NextScene,
}

impl MaskTask {
    pub const fn as_str(self) -> &'static str {
        match self {
            MaskTask::SceneObject => "scene-object",
            MaskTask::NextScene => "next-scene",
        }
    }
}

impl fmt::Display for MaskTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scene-object" | "scene_object" => Ok(MaskTask::SceneObject),
            "next-scene" | "next_scene" => Ok(MaskTask::NextScene),
            other => Err(alloc::format!("unknown task {other:?}, expected scene-object or next-scene")),
        }
    }
}

/// Centered block of maskable cells, bounds inclusive and 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CentralRegion {
    pub first_row: usize,
    pub last_row: usize,
    pub first_col: usize,
    pub last_col: usize,
}

impl CentralRegion {
    /// A `rows x cols` block centered in `grid`; margins must be equal on
    /// opposite sides.
    pub fn centered(grid: &GridSpec, rows: usize, cols: usize) -> Result<Self, MaskError> {
        let fits = rows >= 1
            && cols >= 1
            && rows <= grid.rows
            && cols <= grid.cols
            && (grid.rows - rows).is_multiple_of(2)
            && (grid.cols - cols).is_multiple_of(2);
        if !fits {
            return Err(MaskError::GridTooSmall {
                rows,
                cols,
                grid_rows: grid.rows,
                grid_cols: grid.cols,
            });
        }
        let (a, b) = ((grid.rows - rows) / 2, (grid.cols - cols) / 2);
        Ok(CentralRegion { first_row: a + 1, last_row: a + rows, first_col: b + 1, last_col: b + cols })
    }

    pub fn rows(&self) -> usize {
        self.last_row + 1 - self.first_row
    }

    pub fn cols(&self) -> usize {
        self.last_col + 1 - self.first_col
    }

    pub fn area(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        (self.first_row..=self.last_row).contains(&cell.row)
            && (self.first_col..=self.last_col).contains(&cell.col)
    }

    /// Region cells, row-major.
    pub fn cells(&self) -> impl Iterator<Item = CellIndex> {
        let (c0, c1) = (self.first_col, self.last_col);
        (self.first_row..=self.last_row)
            .flat_map(move |row| (c0..=c1).map(move |col| CellIndex { row, col }))
    }
}

/// Largest centered block (equal margins on opposite sides) holding at most
/// 99 cells. Ties on area go to the block with more rows. A 20x11 grid gives
/// rows 4..=17 and columns 3..=9.
pub fn central_region(grid: &GridSpec) -> Result<CentralRegion, MaskError> {
    grid.validate()?;
    let mut best: Option<(usize, usize)> = None;
    for rows in (1..=grid.rows).rev().filter(|r| (grid.rows - r).is_multiple_of(2)) {
        for cols in (1..=grid.cols).rev().filter(|c| (grid.cols - c).is_multiple_of(2)) {
            let area = rows * cols;
            if area > MAX_REGION_CELLS {
                continue;
            }
            if best.is_none_or(|(r, c)| area > r * c) {
                best = Some((rows, cols));
            }
            break;
        }
    }
    let (rows, cols) = best.ok_or(MaskError::GridTooSmall {
        rows: 1,
        cols: 1,
        grid_rows: grid.rows,
        grid_cols: grid.cols,
    })?;
    CentralRegion::centered(grid, rows, cols)
}

/// Which cells a sample masks. Sentinels are numbered in order of
/// appearance: `masked_current` row-major, then `masked_next` row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaskPlan {
    pub task: MaskTask,
    pub masked_current: Vec<CellIndex>,
    pub masked_next: Vec<CellIndex>,
}

impl MaskPlan {
    pub fn sentinel_count(&self) -> usize {
        self.masked_current.len() + self.masked_next.len()
    }

    /// `(side, cell)` for each sentinel index.
    pub fn slots(&self) -> impl Iterator<Item = (PairSide, CellIndex)> + '_ {
        self.masked_current
            .iter()
            .map(|c| (PairSide::Current, *c))
            .chain(self.masked_next.iter().map(|c| (PairSide::Next, *c)))
    }
}

/// Two consecutive rasterized scenes and their transition metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePair {
    pub id: String,
    pub current_id: String,
    pub next_id: String,
    pub meta: PairMeta,
    pub current: AreaMatrix,
    pub next: AreaMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PairError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

impl ScenePair {
    /// Rasterizes two consecutive scenes. The pair takes the id of its first scene.
    pub fn build(current: &Scene, next: &Scene, grid: &GridSpec, taxonomy: &Taxonomy) -> Result<Self, PairError> {
        Ok(ScenePair {
            id: current.scene_id.clone(),
            current_id: current.scene_id.clone(),
            next_id: next.scene_id.clone(),
            meta: pair_metadata(current, next)?,
            current: rasterize(current, grid, taxonomy)?,
            next: rasterize(next, grid, taxonomy)?,
        })
    }
}

/// Every consecutive pair of a linked sequence, in time order.
pub fn sequence_pairs(
    sequence: &LinkedSequence,
    grid: &GridSpec,
    taxonomy: &Taxonomy,
) -> Result<Vec<ScenePair>, PairError> {
    let matrices = sequence
        .scenes()
        .iter()
        .map(|s| rasterize(s, grid, taxonomy))
        .collect::<Result<Vec<_>, _>>()?;
    sequence
        .pairs()
        .zip(matrices.windows(2))
        .map(|((a, b), m)| {
            Ok(ScenePair {
                id: a.scene_id.clone(),
                current_id: a.scene_id.clone(),
                next_id: b.scene_id.clone(),
                meta: pair_metadata(a, b)?,
                current: m[0].clone(),
                next: m[1].clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSample {
    pub pair_id: String,
    pub current_id: String,
    pub next_id: String,
    pub input: TokenSequence,
    pub target: TokenSequence,
    pub plan: MaskPlan,
}

/// Per-pair seed for one augmentation epoch: the first 8 bytes of
/// SHA-256 over `base_seed`, `epoch` (both little-endian) and the pair id.
pub fn derive_seed(base_seed: u64, epoch: u64, pair_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base_seed.to_le_bytes());
    hasher.update(epoch.to_le_bytes());
    hasher.update(pair_id.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Builds masked samples for one grid and taxonomy.
#[derive(Debug, Clone)]
pub struct TaskBuilder<'t> {
    codec: SceneCodec<'t>,
    grid: GridSpec,
    region: CentralRegion,
    cells_per_scene: usize,
}

impl<'t> TaskBuilder<'t> {
    pub fn new(taxonomy: &'t Taxonomy, grid: GridSpec) -> Result<Self, MaskError> {
        let region = central_region(&grid)?;
        Ok(TaskBuilder {
            codec: SceneCodec::new(taxonomy),
            grid,
            region,
            cells_per_scene: DEFAULT_CELLS_PER_SCENE,
        })
    }

    /// Overrides the number of cells masked per scene in the scene-object task.
    pub fn with_cells_per_scene(mut self, n: usize) -> Result<Self, MaskError> {
        if 2 * n > MAX_REGION_CELLS {
            return Err(MaskError::SentinelBudget(2 * n));
        }
        self.cells_per_scene = n;
        Ok(self)
    }

    pub fn with_region(mut self, region: CentralRegion) -> Result<Self, MaskError> {
        if region.area() > MAX_REGION_CELLS {
            return Err(MaskError::SentinelBudget(region.area()));
        }
        if region.last_row > self.grid.rows || region.last_col > self.grid.cols {
            return Err(MaskError::GridTooSmall {
                rows: region.rows(),
                cols: region.cols(),
                grid_rows: self.grid.rows,
                grid_cols: self.grid.cols,
            });
        }
        self.region = region;
        Ok(self)
    }

    pub fn region(&self) -> &CentralRegion {
        &self.region
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn codec(&self) -> &SceneCodec<'t> {
        &self.codec
    }

    fn check_pair(&self, pair: &ScenePair) -> Result<(), MaskError> {
        if *pair.current.grid() != self.grid || *pair.next.grid() != self.grid {
            return Err(MaskError::GridMismatch(pair.id.clone()));
        }
        Ok(())
    }

    /// Masks `cells_per_scene` distinct central cells in each scene, drawn
    /// uniformly without replacement from a ChaCha8 stream seeded by `seed`.
    pub fn scene_object(&self, pair: &ScenePair, seed: u64) -> Result<MaskedSample, MaskError> {
        self.check_pair(pair)?;
        let k = self.cells_per_scene;
        if self.region.area() < k {
            return Err(MaskError::RegionTooSmall { available: self.region.area(), needed: k });
        }
        let region_cells: Vec<CellIndex> = self.region.cells().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            let mut picked: Vec<CellIndex> = rand::seq::index::sample(&mut rng, region_cells.len(), k)
                .into_iter()
                .map(|i| region_cells[i])
                .collect();
            picked.sort_unstable();
            picked
        };
        let plan = MaskPlan {
            task: MaskTask::SceneObject,
            masked_current: draw(),
            masked_next: draw(),
        };
        self.build(pair, plan, false)
    }

    /// Masks every central cell of the next scene and blanks its margin.
    pub fn next_scene(&self, pair: &ScenePair) -> Result<MaskedSample, MaskError> {
        self.check_pair(pair)?;
        let plan = MaskPlan {
            task: MaskTask::NextScene,
            masked_current: Vec::new(),
            masked_next: self.region.cells().collect(),
        };
        self.build(pair, plan, true)
    }

    fn build(&self, pair: &ScenePair, plan: MaskPlan, blank_next_margin: bool) -> Result<MaskedSample, MaskError> {
        let count = plan.sentinel_count();
        if count > MAX_REGION_CELLS {
            return Err(MaskError::SentinelBudget(count));
        }
        let sentinel_of: BTreeMap<(PairSide, CellIndex), u8> =
            plan.slots().enumerate().map(|(i, slot)| (slot, i as u8)).collect();
        let region = self.region;
        let input = self.codec.serialize_pair_with(&pair.current, &pair.next, &pair.meta, |side, cell, labels| {
            if let Some(&n) = sentinel_of.get(&(side, cell)) {
                CellSlot::Sentinel(n)
            } else if blank_next_margin && side == PairSide::Next && !region.contains(cell) {
                CellSlot::Empty
            } else {
                CellSlot::Labels(labels)
            }
        })?;
        let spans = plan
            .slots()
            .map(|(side, cell)| match side {
                PairSide::Current => pair.current.get(cell).clone(),
                PairSide::Next => pair.next.get(cell).clone(),
            })
            .collect::<Vec<LabelSet>>();
        let target = self.codec.render_targets(&SpanTargets::new(spans))?;
        Ok(MaskedSample {
            pair_id: pair.id.clone(),
            current_id: pair.current_id.clone(),
            next_id: pair.next_id.clone(),
            input,
            target,
            plan,
        })
    }

    /// Scene-object samples for one augmentation epoch, one per pair, each
    /// seeded by [`derive_seed`]. The stream depends only on its arguments.
    pub fn remask_epoch<'a>(
        &'a self,
        pairs: &'a [ScenePair],
        epoch: u64,
        base_seed: u64,
    ) -> impl Iterator<Item = Result<MaskedSample, MaskError>> + 'a {
        pairs
            .iter()
            .map(move |pair| self.scene_object(pair, derive_seed(base_seed, epoch, &pair.id)))
    }
}

/// Replaces each sentinel in `input` with the tokens of its span in `target`.
pub fn splice(input: &TokenSequence, target: &TokenSequence) -> Result<TokenSequence, MaskError> {
    let mut spans: BTreeMap<u8, &[Token]> = BTreeMap::new();
    let toks = target.as_slice();
    let mut i = 0;
    while i < toks.len() {
        if let Token::Sentinel(n) = toks[i] {
            let end = toks[i + 1..].iter().position(Token::is_sentinel).map_or(toks.len(), |p| i + 1 + p);
            spans.insert(n, &toks[i + 1..end]);
            i = end;
        } else {
            i += 1;
        }
    }
    let mut out = Vec::with_capacity(input.len() + target.len());
    for token in input.iter() {
        match token {
            Token::Sentinel(n) => {
                let span = spans.get(n).filter(|s| !s.is_empty()).ok_or(MaskError::MissingSpan(*n))?;
                out.extend_from_slice(span);
            }
            other => out.push(other.clone()),
        }
    }
    Ok(TokenSequence::new(out))
}
