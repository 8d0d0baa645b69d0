//! Koch snowflake prefractals tiled by equilateral triangles.
//!
//! The level-`j` prefractal `Ω_j` is the polygon obtained from the initial
//! triangle by `j` outward edge substitutions. It is tiled by triangles of side
//! `t_j = 3^{-j}·√3h₀/2`, each treated as a scaled copy of the initial triangle,
//! itself the 4-map equilateral-triangle attractor.

use std::sync::Arc;

use crate::builtin::eps;
use crate::error::{Error, Result};
use crate::geom::{rotation, Mat2, Similarity, Vec2};
use crate::ifs::{equilateral_triangle, IfsAttractor, Word};
use crate::lattice::LatticeLayout;
use crate::mesh::{LhMesh, MeshElement};

/// `N_j = (8·9^j - 3·4^j)/5`.
pub fn prefractal_count(j: u32) -> u64 {
    (8 * 9u64.pow(j) - 3 * 4u64.pow(j)) / 5
}

/// Side `√3h₀/2` of the initial triangle.
pub fn initial_side(h0: f64) -> f64 {
    3f64.sqrt() * h0 / 2.0
}

/// Vertices of `Ω_j` in integer coordinates on the lattice `t_j ε₁ ℤ + t_j ε₂ ℤ`,
/// counter-clockwise from the bottom vertex.
pub fn prefractal_lattice_polygon(j: u32) -> Vec<(i64, i64)> {
    let s = 3i64.pow(j);
    let mut poly = vec![(0, 0), (0, s), (-s, s)];
    for _ in 0..j {
        let mut next = Vec::with_capacity(4 * poly.len());
        for (idx, &a) in poly.iter().enumerate() {
            let b = poly[(idx + 1) % poly.len()];
            let d = ((b.0 - a.0) / 3, (b.1 - a.1) / 3);
            let p1 = (a.0 + d.0, a.1 + d.1);
            // Rotation by -π/3 in the (ε₁, ε₂) basis: (x, y) ↦ (x + y, -x).
            let peak = (p1.0 + d.0 + d.1, p1.1 - d.0);
            let p2 = (p1.0 + d.0, p1.1 + d.1);
            next.extend([a, p1, peak, p2]);
        }
        poly = next;
    }
    poly
}

fn lattice_basis(t: f64) -> Mat2 {
    Mat2::from_columns(&[eps(1) * t, eps(2) * t])
}

/// Bottom vertex of the initial triangle.
fn anchor(h0: f64) -> Vec2 {
    Vec2::new(0.0, -0.5 * h0)
}

/// Vertices of `Ω_j` in physical coordinates.
pub fn prefractal_polygon(j: u32, h0: f64) -> Vec<Vec2> {
    let t = initial_side(h0) / 3f64.powi(j as i32);
    let b = lattice_basis(t);
    prefractal_lattice_polygon(j)
        .into_iter()
        .map(|(a1, a2)| anchor(h0) + b * Vec2::new(a1 as f64, a2 as f64))
        .collect()
}

/// Shoelace area.
pub fn polygon_area(v: &[Vec2]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].x * v[(i + 1) % n].y - v[(i + 1) % n].x * v[i].y).sum::<f64>()
}

/// Even-odd ray casting along `+x`.
pub fn point_in_polygon(p: (f64, f64), v: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (a.1 > p.1) != (b.1 > p.1) {
            let x = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if x > p.0 {
                inside = !inside;
            }
        }
    }
    inside
}

#[derive(Debug, Clone)]
pub struct PrefractalMesh {
    pub j: u32,
    pub h0: f64,
    /// Triangle side `t_j`.
    pub side: f64,
    pub polygon: Vec<Vec2>,
    /// Cells as images of the initial triangle.
    pub mesh: LhMesh,
    /// Families `down` (0) and `up` (1) on the lattice `t_j[ε₁ ε₂]`.
    pub layout: LatticeLayout,
}

impl PrefractalMesh {
    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.mesh.total_measure()
    }

    pub fn is_up(&self, i: usize) -> bool {
        self.layout.coords[i].family == 1
    }
}

/// Initial triangle as a 2-attractor (side `√3h₀/2`, pointing down, centroid at 0).
pub fn reference_triangle(h0: f64) -> IfsAttractor {
    equilateral_triangle(initial_side(h0))
}

/// Tile `Ω_j` by the lattice triangles whose centroids lie inside it.
pub fn build_prefractal_mesh(j: u32, h0: f64) -> Result<PrefractalMesh> {
    if !(h0 > 0.0) {
        return Err(Error::Config("prefractal h0 must be positive".into()));
    }
    if j > 6 {
        return Err(Error::Config(format!("prefractal level {j} exceeds the cap 6")));
    }
    let ifs = Arc::new(reference_triangle(h0));
    let rho = 3f64.powi(-(j as i32));
    let t = initial_side(h0) * rho;
    let basis = lattice_basis(t);
    let poly = prefractal_lattice_polygon(j);
    let polyf: Vec<(f64, f64)> = poly.iter().map(|&(a, b)| (a as f64, b as f64)).collect();
    let (amin, amax) = poly.iter().fold((i64::MAX, i64::MIN), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let (bmin, bmax) = poly.iter().fold((i64::MAX, i64::MIN), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let down_origin = anchor(h0) + basis * Vec2::new(2.0 / 3.0, 2.0 / 3.0);
    let up_origin = anchor(h0) + basis * Vec2::new(1.0 / 3.0, 1.0 / 3.0);
    let flip = rotation(std::f64::consts::PI);
    let mut elements = Vec::new();
    let mut fams = Vec::new();
    for b in bmin..bmax {
        for a in amin..amax {
            for (fam, off) in [(0u8, 2.0 / 3.0), (1u8, 1.0 / 3.0)] {
                if !point_in_polygon((a as f64 + off, b as f64 + off), &polyf) {
                    continue;
                }
                let (origin, rot) = if fam == 0 { (down_origin, Mat2::identity()) } else { (up_origin, flip) };
                let c = origin + basis * Vec2::new(a as f64, b as f64);
                let map = Similarity::new(rho, rot, c);
                elements.push(MeshElement::new(&ifs, Word::empty(), map));
                fams.push(fam);
            }
        }
    }
    let expected = prefractal_count(j);
    if elements.len() as u64 != expected {
        return Err(Error::Geometry(format!(
            "prefractal level {j}: tiling produced {} triangles, expected {expected}",
            elements.len()
        )));
    }
    let mesh = LhMesh::from_elements(ifs, elements)?;
    let layout = LatticeLayout::fit(&mesh, basis, vec![down_origin, up_origin], vec!["down", "up"], |i| {
        Some(vec![fams[i]])
    })?;
    let polygon = prefractal_polygon(j, h0);
    Ok(PrefractalMesh { j, h0, side: t, polygon, mesh, layout })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{Example, KOCH_DEFAULT_H0};

    #[test]
    fn counts_and_areas() {
        let h0 = KOCH_DEFAULT_H0;
        for j in 0..=4 {
            let m = build_prefractal_mesh(j, h0).unwrap();
            assert_eq!(m.len() as u64, prefractal_count(j));
            let pa = polygon_area(&m.polygon);
            assert!((m.area() - pa).abs() < 1e-12 * pa, "j={j}");
        }
        assert_eq!([1, 12, 120, 1128, 10344].to_vec(), (0..5).map(prefractal_count).collect::<Vec<_>>());
    }

    #[test]
    fn polygon_vertices_lie_on_the_snowflake() {
        let ex = Example::koch();
        let hull = ex.attractor().hull().clone();
        for v in prefractal_polygon(3, ex.h0()) {
            assert!(hull.contains(&v) || hull.distance(&crate::geom::ConvexPolygon::from_points(&[v])) < 1e-12);
        }
        let outer = prefractal_polygon(1, ex.h0());
        for v in outer.iter().step_by(2) {
            assert!((v.norm() - ex.h0() / 2.0).abs() < 1e-12);
        }
    }
}
