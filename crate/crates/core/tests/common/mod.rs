#![allow(dead_code)]

use bevscene_core::*;
use proptest::prelude::*;
use rand::Rng;

/// Random matrix: each cell is empty with probability `p_empty`, otherwise
/// holds one to three labels drawn from the whole taxonomy.
pub fn random_matrix(rng: &mut impl Rng, grid: GridSpec, tax: &Taxonomy, p_empty: f64) -> AreaMatrix {
    let ids: Vec<LabelId> = tax.ids().collect();
    let mut m = AreaMatrix::empty(grid);
    for cell in grid.cells() {
        if rng.random::<f64>() < p_empty {
            continue;
        }
        for _ in 0..rng.random_range(1..=3) {
            m.insert(cell, ids[rng.random_range(0..ids.len())]);
        }
    }
    m
}

pub fn random_meta(rng: &mut impl Rng) -> PairMeta {
    let country = ["US", "SG", "DE"][rng.random_range(0..3)];
    PairMeta {
        country: country.into(),
        dist_m: rng.random_range(0.0..20.0),
        orientation_diff_deg: rng.random_range(-179.9..180.0),
    }
    .quantized()
}

pub fn random_set(rng: &mut impl Rng, tax: &Taxonomy, max: usize) -> LabelSet {
    let ids: Vec<LabelId> = tax.ids().collect();
    (0..rng.random_range(0..=max)).map(|_| ids[rng.random_range(0..ids.len())]).collect()
}

pub fn label_set_strategy(tax_len: usize, max: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..tax_len, 0..=max)
}

pub fn to_set(tax: &Taxonomy, picks: &[usize]) -> LabelSet {
    let ids: Vec<LabelId> = tax.ids().collect();
    picks.iter().map(|&i| ids[i]).collect()
}

pub fn matrix_strategy(grid: GridSpec, tax_len: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(
        prop_oneof![2 => Just(Vec::new()), 1 => label_set_strategy(tax_len, 3)],
        grid.cell_count(),
    )
}

pub fn to_matrix(grid: GridSpec, tax: &Taxonomy, cells: &[Vec<usize>]) -> AreaMatrix {
    AreaMatrix::from_cells(grid, cells.iter().map(|c| to_set(tax, c)).collect()).unwrap()
}

/// All `(row, col)` cells whose intervals contain the point, scanning every
/// cell. Row `i` spans `[-rear + (i-1)h, -rear + ih)` forward and column `j`
/// spans `[-left + (j-1)w, -left + jw)` rightward; the outer front and right
/// edges are closed.
pub fn brute_force_cells(p: EgoPoint, g: &GridSpec) -> Vec<CellIndex> {
    let right = -p.lat;
    let mut hits = Vec::new();
    for i in 1..=g.rows {
        let lo = -g.rear_m + (i - 1) as f64 * g.cell_h;
        let hi = -g.rear_m + i as f64 * g.cell_h;
        let in_row = lo <= p.lon && (p.lon < hi || (i == g.rows && p.lon == hi));
        for j in 1..=g.cols {
            let lo = -g.left_m + (j - 1) as f64 * g.cell_w;
            let hi = -g.left_m + j as f64 * g.cell_w;
            let in_col = lo <= right && (right < hi || (j == g.cols && right == hi));
            if in_row && in_col {
                hits.push(CellIndex::new(i, j));
            }
        }
    }
    hits
}

/// Hand count of TP/FP/FN over every (cell, label) combination.
pub fn hand_count(pred: &[LabelSet], gold: &[LabelSet], tax: &Taxonomy) -> (u64, u64, u64, u64) {
    let (mut tp, mut fp, mut fn_, mut exact) = (0, 0, 0, 0);
    for (p, g) in pred.iter().zip(gold) {
        let mut same = true;
        for id in tax.ids() {
            match (p.contains(id), g.contains(id)) {
                (true, true) => tp += 1,
                (true, false) => {
                    fp += 1;
                    same = false;
                }
                (false, true) => {
                    fn_ += 1;
                    same = false;
                }
                (false, false) => {}
            }
        }
        if same {
            exact += 1;
        }
    }
    (tp, fp, fn_, exact)
}

/// Moves every occupied cell's center by the inverse ego motion and finds its
/// new cell by scanning all cells.
pub fn brute_force_persistence(current: &AreaMatrix, meta: &PairMeta, tax: &Taxonomy) -> AreaMatrix {
    let g = *current.grid();
    let ego = tax.id(EGO_LABEL).unwrap();
    let (s, c) = exact_sin_cos(meta.orientation_diff_deg);
    let mut out = AreaMatrix::empty(g);
    for cell in g.cells() {
        let labels = current.get(cell);
        let lon = -g.rear_m + (cell.row as f64 - 0.5) * g.cell_h;
        let lat = g.left_m - (cell.col as f64 - 0.5) * g.cell_w;
        let p = EgoPoint { lon: c * lon + s * lat - meta.dist_m, lat: -s * lon + c * lat };
        if let Some(&target) = brute_force_cells(p, &g).first() {
            for id in labels.iter().filter(|id| *id != ego) {
                out.insert(target, id);
            }
        }
    }
    let origin = brute_force_cells(EgoPoint { lat: 0.0, lon: 0.0 }, &g)[0];
    out.insert(origin, ego);
    out
}

/// `sin`/`cos` of degrees, exact at quarter turns.
pub fn exact_sin_cos(deg: f64) -> (f64, f64) {
    if deg % 90.0 == 0.0 {
        match (deg / 90.0).rem_euclid(4.0) as i64 {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        deg.to_radians().sin_cos()
    }
}

/// Synthetic pairs from the default generator.
pub fn synth_pairs(cfg: &SynthConfig, grid: GridSpec, tax: &Taxonomy) -> Vec<ScenePair> {
    let mut pairs = Vec::new();
    for seq in synth_sequences(cfg, tax).unwrap() {
        let linked = link_sequence(seq.scenes).unwrap();
        pairs.extend(sequence_pairs(&linked, &grid, tax).unwrap());
    }
    pairs
}

/// Serialization of the pair with the next scene's margin blanked.
pub fn blank_margin(next: &AreaMatrix, region: &CentralRegion) -> AreaMatrix {
    let mut out = next.clone();
    for cell in next.grid().cells() {
        if !region.contains(cell) {
            *out.get_mut(cell) = LabelSet::new();
        }
    }
    out
}
