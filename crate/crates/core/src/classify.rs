//! Splitting element pairs into regular (disjoint closures) and singular (touching) sets.

use std::collections::BTreeSet;

use crate::builtin::Example;
use crate::error::{Error, Result};
use crate::geom::ConvexPolygon;
use crate::lattice::{LatticeCoord, LatticeLayout, OffsetKey};
use crate::mesh::LhMesh;

/// Default relative tolerance for the hull-distance touching test.
pub const TOUCH_TOL: f64 = 1e-6;

/// Singular pairs in compressed-row form; everything else is regular.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionSplit {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl InteractionSplit {
    fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        InteractionSplit { row_ptr, cols }
    }

    pub fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Sorted singular partners of `i` (including `i`).
    pub fn row(&self, i: usize) -> &[usize] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn is_singular(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&j).is_ok()
    }

    pub fn num_singular(&self) -> usize {
        self.cols.len()
    }

    pub fn num_regular(&self) -> usize {
        self.n() * self.n() - self.num_singular()
    }

    pub fn singular_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |i| self.row(i).iter().map(move |&j| (i, j)))
    }
}

/// Touching test on cell hulls. `scale` sets the absolute tolerance.
pub fn hulls_touch(a: &ConvexPolygon, b: &ConvexPolygon, scale: f64, tol: f64) -> bool {
    a.distance(b) < tol * scale
}

/// Hull-distance classification, valid for any mesh.
pub fn classify_by_hulls(mesh: &LhMesh, tol: f64) -> InteractionSplit {
    let hulls = mesh.hulls();
    let r = mesh.ifs().radius();
    let h = mesh.h();
    let el = mesh.elements();
    let radius: Vec<f64> = el.iter().map(|e| e.map.rho * r).collect();
    let rmax = radius.iter().cloned().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..el.len()).collect();
    order.sort_by(|&a, &b| el[a].node.x.total_cmp(&el[b].node.x).then(a.cmp(&b)));
    let mut rows = vec![Vec::new(); el.len()];
    for (p, &i) in order.iter().enumerate() {
        rows[i].push(i);
        for &j in &order[p + 1..] {
            let dx = el[j].node.x - el[i].node.x;
            if dx > radius[i] + rmax + tol * h {
                break;
            }
            if (el[j].node - el[i].node).norm() > radius[i] + radius[j] + tol * h {
                continue;
            }
            if hulls_touch(&hulls[i], &hulls[j], h, tol) {
                rows[i].push(j);
                rows[j].push(i);
            }
        }
    }
    InteractionSplit::from_rows(rows)
}

/// Classification by a table of touching lattice offsets.
pub fn classify_by_lattice(layout: &LatticeLayout, table: &[OffsetKey]) -> InteractionSplit {
    let index = layout.index_map();
    let rows = layout
        .coords
        .iter()
        .map(|c| {
            table
                .iter()
                .filter(|k| k.0 == c.family)
                .filter_map(|k| index.get(&LatticeCoord { family: k.1, a1: c.a1 - k.2, a2: c.a2 - k.3 }).copied())
                .collect()
        })
        .collect();
    InteractionSplit::from_rows(rows)
}

/// Touching offsets observed in a split, as a sorted table.
pub fn derive_adjacency(layout: &LatticeLayout, split: &InteractionSplit) -> Vec<OffsetKey> {
    let set: BTreeSet<OffsetKey> = split.singular_pairs().map(|(i, j)| layout.key(i, j)).collect();
    set.into_iter().collect()
}

/// Frozen touching-offset tables for the examples (valid at every level ≥ 1),
/// obtained from [`derive_adjacency`] on the level-3 hull classification.
pub fn adjacency_table(example: &Example) -> &'static [OffsetKey] {
    match example {
        Example::Fudgeflake => FUDGEFLAKE_ADJ,
        Example::Gosper => GOSPER_ADJ,
        Example::Koch { .. } => KOCH_ADJ,
    }
}

/// Self plus the six hexagonal neighbours.
const HEX_ADJ: &[OffsetKey] = &[(0, 0, -1, 0), (0, 0, -1, 1), (0, 0, 0, -1), (0, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, -1), (0, 0, 1, 0)];
const FUDGEFLAKE_ADJ: &[OffsetKey] = HEX_ADJ;
const GOSPER_ADJ: &[OffsetKey] = HEX_ADJ;
#[rustfmt::skip]
const KOCH_ADJ: &[OffsetKey] = &[
    (0, 0, -1, 0), (0, 0, -1, 1), (0, 0, 0, -1), (0, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, -1), (0, 0, 1, 0),
    (0, 1, 0, 0), (0, 1, 0, 1), (0, 1, 1, 0), (0, 2, -1, 1), (0, 2, 0, 0), (0, 2, 0, 1),
    (1, 0, -1, 0), (1, 0, 0, -1), (1, 0, 0, 0), (1, 1, 0, 0), (1, 2, -1, 0), (1, 2, -1, 1), (1, 2, 0, 0),
    (2, 0, 0, -1), (2, 0, 0, 0), (2, 0, 1, -1), (2, 1, 0, 0), (2, 1, 1, -1), (2, 1, 1, 0), (2, 2, 0, 0),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassifyMode {
    Lattice,
    Hull,
}

/// Classify all pairs of an example mesh, by lattice table when possible.
pub fn classify_pairs(mesh: &LhMesh, example: Option<&Example>, mode: ClassifyMode) -> Result<InteractionSplit> {
    match (mode, example) {
        (ClassifyMode::Hull, _) => Ok(classify_by_hulls(mesh, TOUCH_TOL)),
        (ClassifyMode::Lattice, Some(ex)) => {
            if mesh.level() == Some(0) {
                return Ok(InteractionSplit::from_rows(vec![vec![0]]));
            }
            let layout = crate::lattice::lattice_coords(ex, mesh)?;
            Ok(classify_by_lattice(&layout, adjacency_table(ex)))
        }
        (ClassifyMode::Lattice, None) => Err(Error::Unsupported("lattice classification needs a named example".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::lattice_coords;
    use crate::mesh::example_mesh;

    #[test]
    fn frozen_tables_match_hull_classification() {
        for ex in [Example::Fudgeflake, Example::Gosper, Example::koch()] {
            let m = example_mesh(&ex, 3).unwrap();
            let lay = lattice_coords(&ex, &m).unwrap();
            let s = classify_by_hulls(&m, TOUCH_TOL);
            assert_eq!(derive_adjacency(&lay, &s), adjacency_table(&ex).to_vec(), "{}", ex.name());
        }
    }

    #[test]
    fn lattice_and_hull_modes_agree() {
        for ex in [Example::Fudgeflake, Example::Gosper, Example::koch()] {
            for l in 0..=4 {
                let m = example_mesh(&ex, l).unwrap();
                let a = classify_pairs(&m, Some(&ex), ClassifyMode::Lattice).unwrap();
                let b = classify_pairs(&m, Some(&ex), ClassifyMode::Hull).unwrap();
                assert_eq!(a, b, "{} level {l}", ex.name());
            }
        }
    }

    #[test]
    fn level_one_touching_pairs() {
        let f = example_mesh(&Example::Fudgeflake, 1).unwrap();
        let s = classify_by_hulls(&f, TOUCH_TOL);
        assert!(s.is_singular(0, 1));
        let k = example_mesh(&Example::koch(), 1).unwrap();
        let s = classify_by_hulls(&k, TOUCH_TOL);
        assert!(!s.is_singular(0, 3));
        assert!(s.is_singular(0, 1));
        assert!(s.is_singular(0, 6));
    }
}
