//! Lattice structure of the example meshes.
//!
//! Every cell node is `origin[F] + a1·e1 + a2·e2` for a family `F` and
//! integers `(a1, a2)`. Within a family all cells are translates of one
//! another (as sets carrying the same quadrature rule), so interactions depend
//! only on `(F, F', Δa)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::builtin::{eps, Example};
use crate::error::{Error, Result};
use crate::geom::{rotation, Mat2, Similarity, Vec2};
use crate::mesh::LhMesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LatticeCoord {
    pub family: u8,
    pub a1: i64,
    pub a2: i64,
}

/// `(F, F', Δa1, Δa2)` with `Δa = a_i - a_j`.
pub type OffsetKey = (u8, u8, i64, i64);

#[derive(Clone, Debug)]
pub struct LatticeLayout {
    /// Columns `e1`, `e2`.
    pub basis: Mat2,
    pub origins: Vec<Vec2>,
    pub family_names: Vec<&'static str>,
    pub coords: Vec<LatticeCoord>,
}

impl LatticeLayout {
    /// Snap every node of `mesh` onto the lattice; families are tried in order.
    pub fn fit(
        mesh: &LhMesh,
        basis: Mat2,
        origins: Vec<Vec2>,
        family_names: Vec<&'static str>,
        family_of: impl Fn(usize) -> Option<Vec<u8>>,
    ) -> Result<Self> {
        let inv = basis
            .try_inverse()
            .ok_or_else(|| Error::Numeric("degenerate lattice basis".into()))?;
        let tol = 1e-8 * mesh.h();
        let mut coords = Vec::with_capacity(mesh.len());
        for (i, e) in mesh.elements().iter().enumerate() {
            let candidates = family_of(i).unwrap_or_else(|| (0..origins.len() as u8).collect());
            let mut found = None;
            for f in candidates {
                let a = inv * (e.node - origins[f as usize]);
                let (a1, a2) = (a.x.round(), a.y.round());
                let back = origins[f as usize] + basis * Vec2::new(a1, a2);
                if (back - e.node).norm() <= tol {
                    found = Some(LatticeCoord { family: f, a1: a1 as i64, a2: a2 as i64 });
                    break;
                }
            }
            coords.push(found.ok_or_else(|| {
                Error::Geometry(format!("node of element {i} ({}) is not on the lattice", e.word))
            })?);
        }
        let layout = LatticeLayout { basis, origins, family_names, coords };
        if layout.index_map().len() != layout.coords.len() {
            return Err(Error::Geometry("two elements share a lattice coordinate".into()));
        }
        Ok(layout)
    }

    pub fn num_families(&self) -> usize {
        self.origins.len()
    }

    pub fn position(&self, c: &LatticeCoord) -> Vec2 {
        self.origins[c.family as usize] + self.basis * Vec2::new(c.a1 as f64, c.a2 as f64)
    }

    /// Node difference `x_i - x_j` for a pair with the given key.
    pub fn displacement(&self, key: &OffsetKey) -> Vec2 {
        let (f, g, d1, d2) = *key;
        self.origins[f as usize] - self.origins[g as usize] + self.basis * Vec2::new(d1 as f64, d2 as f64)
    }

    pub fn key(&self, i: usize, j: usize) -> OffsetKey {
        let (ci, cj) = (self.coords[i], self.coords[j]);
        (ci.family, cj.family, ci.a1 - cj.a1, ci.a2 - cj.a2)
    }

    pub fn family_counts(&self) -> Vec<usize> {
        let mut n = vec![0; self.num_families()];
        for c in &self.coords {
            n[c.family as usize] += 1;
        }
        n
    }

    pub fn index_map(&self) -> BTreeMap<LatticeCoord, usize> {
        self.coords.iter().enumerate().map(|(i, c)| (*c, i)).collect()
    }

    /// `(min a1, min a2, max a1, max a2)` over all families.
    pub fn bounding_box(&self) -> (i64, i64, i64, i64) {
        self.coords.iter().fold((i64::MAX, i64::MAX, i64::MIN, i64::MIN), |(x0, y0, x1, y1), c| {
            (x0.min(c.a1), y0.min(c.a2), x1.max(c.a1), y1.max(c.a2))
        })
    }
}

/// Per-element maps whose linear part is shared within each family, obtained
/// by composing with symmetries of the attractor (the cells are unchanged as sets).
/// `None` if some element cannot be aligned with its family representative.
pub fn aligned_rule_maps(mesh: &LhMesh, layout: &LatticeLayout) -> Option<Vec<Similarity>> {
    let syms = mesh.ifs().symmetries();
    let mut reps: Vec<Option<Mat2>> = vec![None; layout.num_families()];
    let mut out = Vec::with_capacity(mesh.len());
    for (e, c) in mesh.elements().iter().zip(&layout.coords) {
        let rep = *reps[c.family as usize].get_or_insert(e.map.linear());
        let m = syms.iter().map(|g| e.map.compose(g)).find(|m| (m.linear() - rep).norm() <= 1e-10 * e.map.rho)?;
        out.push(m);
    }
    Some(out)
}

/// Lattice coordinates of an example mesh at its level.
pub fn lattice_coords(example: &Example, mesh: &LhMesh) -> Result<LatticeLayout> {
    let level = mesh
        .level()
        .ok_or_else(|| Error::Unsupported("lattice coordinates need an example mesh with a level".into()))?;
    if level == 0 {
        return LatticeLayout::fit(mesh, Mat2::identity(), vec![mesh.elements()[0].node], vec!["B"], |_| None);
    }
    let l = level as f64;
    let s3 = 3f64.sqrt();
    let eps_mat = |r: Mat2, scale: f64| -> Mat2 {
        let e1 = r * eps(1) * scale;
        let e2 = r * eps(2) * scale;
        Mat2::from_columns(&[e1, e2])
    };
    match *example {
        Example::Fudgeflake => {
            let basis = eps_mat(rotation(l * PI / 6.0), s3.powf(-l));
            let origin = rotation((l + 1.0) * PI / 6.0) * eps(1) * s3.powf(-(l + 1.0));
            LatticeLayout::fit(mesh, basis, vec![origin], vec!["B"], |_| None)
        }
        Example::Gosper => {
            let th = (s3 / (2.0 * 7f64.sqrt())).asin();
            let basis = eps_mat(rotation(l * th), s3 * 7f64.sqrt().powf(-l));
            LatticeLayout::fit(mesh, basis, vec![Vec2::zeros()], vec!["B"], |_| None)
        }
        Example::Koch { h0 } => {
            let basis = eps_mat(rotation((l + 1.0) * PI / 6.0), h0 * s3.powf(-l));
            let r = rotation((l + 2.0) * PI / 6.0);
            let s_scale = h0 * s3.powf(-(l + 1.0));
            let origins = vec![Vec2::zeros(), r * eps(1) * s_scale, r * eps(2) * s_scale];
            let big = h0 * s3.powf(-l);
            let elements = mesh.elements();
            LatticeLayout::fit(mesh, basis, origins, vec!["B", "S1", "S2"], |i| {
                if (elements[i].diam - big).abs() <= 1e-9 * big {
                    Some(vec![0])
                } else {
                    Some(vec![1, 2])
                }
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::example_mesh;

    #[test]
    fn koch_family_sizes() {
        let k = Example::koch();
        for l in 1..=5u32 {
            let m = example_mesh(&k, l).unwrap();
            let lay = lattice_coords(&k, &m).unwrap();
            let n = lay.family_counts();
            let b = (3i64.pow(l + 1) - (-2i64).pow(l + 1)) / 5;
            let s = (2 * 3i64.pow(l + 1) + 3 * (-2i64).pow(l + 1)) / 5;
            assert_eq!(n[0] as i64, b, "level {l}");
            assert_eq!((n[1] + n[2]) as i64, s, "level {l}");
        }
    }

    #[test]
    fn homogeneous_examples_snap() {
        for ex in [Example::Fudgeflake, Example::Gosper] {
            for l in 0..=3 {
                let m = example_mesh(&ex, l).unwrap();
                let lay = lattice_coords(&ex, &m).unwrap();
                for (i, c) in lay.coords.iter().enumerate() {
                    assert!((lay.position(c) - m.elements()[i].node).norm() < 1e-10 * m.h());
                }
            }
        }
    }
}
