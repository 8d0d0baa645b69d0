//! Planar similarities and convex polygons.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Anticlockwise rotation by `theta` radians.
pub fn rotation(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Reflection across the line through the origin at angle `phi`.
pub fn reflection(phi: f64) -> Mat2 {
    let (s, c) = (2.0 * phi).sin_cos();
    Mat2::new(c, s, s, -c)
}

/// Contracting (or general) similarity `x -> rho * rot * x + shift`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub rho: f64,
    pub rot: Mat2,
    pub shift: Vec2,
}

impl Similarity {
    /// Validated constructor for IFS maps: `0 < rho < 1`, `rot` orthogonal.
    pub fn contraction(rho: f64, rot: Mat2, shift: Vec2) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Input(format!("contraction factor {rho} outside (0,1)")));
        }
        let s = Self { rho, rot, shift };
        s.check_orthogonal()?;
        Ok(s)
    }

    pub fn new(rho: f64, rot: Mat2, shift: Vec2) -> Self {
        Self { rho, rot, shift }
    }

    pub fn identity() -> Self {
        Self { rho: 1.0, rot: Mat2::identity(), shift: Vec2::zeros() }
    }

    pub fn translation(t: Vec2) -> Self {
        Self { rho: 1.0, rot: Mat2::identity(), shift: t }
    }

    pub fn check_orthogonal(&self) -> Result<()> {
        let err = (self.rot.transpose() * self.rot - Mat2::identity()).norm();
        if err > 1e-12 {
            return Err(Error::Input(format!("rotation matrix not orthogonal (|RᵀR - I| = {err:.3e})")));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, x: &Vec2) -> Vec2 {
        self.rho * (self.rot * x) + self.shift
    }

    /// Linear part `rho * rot`.
    #[inline]
    pub fn linear(&self) -> Mat2 {
        self.rho * self.rot
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Similarity) -> Similarity {
        Similarity {
            rho: self.rho * inner.rho,
            rot: self.rot * inner.rot,
            shift: self.apply(&inner.shift),
        }
    }

    pub fn inverse(&self) -> Similarity {
        let rt = self.rot.transpose();
        Similarity { rho: 1.0 / self.rho, rot: rt, shift: -(rt * self.shift) / self.rho }
    }

    /// Unique fixed point, from `(I - rho*rot) p = shift`.
    pub fn fixed_point(&self) -> Result<Vec2> {
        let m = Mat2::identity() - self.linear();
        m.try_inverse()
            .map(|inv| inv * self.shift)
            .ok_or_else(|| Error::Numeric("similarity has no unique fixed point".into()))
    }

    pub fn det_sign(&self) -> f64 {
        self.rot.determinant().signum()
    }

    /// Conjugate by a global similarity `g`: returns `g ∘ self ∘ g⁻¹`.
    pub fn conjugate(&self, g: &Similarity) -> Similarity {
        g.compose(self).compose(&g.inverse())
    }
}

/// Convex polygon with anticlockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    pub verts: Vec<Vec2>,
}

#[inline]
fn cross(o: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Monotone-chain convex hull; anticlockwise, collinear points dropped.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a == b);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vec2> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn seg_point_dist(a: &Vec2, b: &Vec2, p: &Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a + t * ab - p).norm()
}

impl ConvexPolygon {
    pub fn from_points(points: &[Vec2]) -> Self {
        Self { verts: convex_hull(points) }
    }

    /// Drop vertices that are within `tol` of the segment joining their neighbours.
    pub fn simplified(&self, tol: f64) -> Self {
        let mut v = self.verts.clone();
        loop {
            let n = v.len();
            if n <= 3 {
                break;
            }
            let mut removed = false;
            let mut i = 0;
            while i < v.len() && v.len() > 3 {
                let n = v.len();
                let a = v[(i + n - 1) % n];
                let c = v[(i + 1) % n];
                if seg_point_dist(&a, &c, &v[i]) < tol {
                    v.remove(i);
                    removed = true;
                } else {
                    i += 1;
                }
            }
            if !removed {
                break;
            }
        }
        Self { verts: v }
    }

    pub fn transformed(&self, s: &Similarity) -> Self {
        let mut verts: Vec<Vec2> = self.verts.iter().map(|v| s.apply(v)).collect();
        if s.det_sign() < 0.0 {
            verts.reverse();
        }
        Self { verts }
    }

    pub fn area(&self) -> f64 {
        let n = self.verts.len();
        (0..n)
            .map(|i| {
                let a = &self.verts[i];
                let b = &self.verts[(i + 1) % n];
                a.x * b.y - a.y * b.x
            })
            .sum::<f64>()
            * 0.5
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.verts.iter().enumerate() {
            for b in &self.verts[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    fn separated_by_edges_of(&self, other: &ConvexPolygon) -> bool {
        let n = self.verts.len();
        for i in 0..n {
            let a = &self.verts[i];
            let b = &self.verts[(i + 1) % n];
            if other.verts.iter().all(|p| cross(a, b, p) < 0.0) {
                return true;
            }
        }
        false
    }

    /// Euclidean distance between the two (closed, filled) polygons; zero when they overlap.
    pub fn distance(&self, other: &ConvexPolygon) -> f64 {
        if !self.separated_by_edges_of(other) && !other.separated_by_edges_of(self) {
            return 0.0;
        }
        let mut d = f64::INFINITY;
        for (p, q) in [(self, other), (other, self)] {
            let n = q.verts.len();
            for v in &p.verts {
                for i in 0..n {
                    d = d.min(seg_point_dist(&q.verts[i], &q.verts[(i + 1) % n], v));
                }
            }
        }
        d
    }

    /// Area of the intersection (Sutherland–Hodgman clipping).
    pub fn intersection_area(&self, other: &ConvexPolygon) -> f64 {
        let mut out = self.verts.clone();
        let n = other.verts.len();
        for i in 0..n {
            if out.is_empty() {
                break;
            }
            let a = other.verts[i];
            let b = other.verts[(i + 1) % n];
            let input = std::mem::take(&mut out);
            let m = input.len();
            for j in 0..m {
                let p = input[j];
                let q = input[(j + 1) % m];
                let cp = cross(&a, &b, &p);
                let cq = cross(&a, &b, &q);
                if cp >= 0.0 {
                    out.push(p);
                }
                if (cp >= 0.0) != (cq >= 0.0) {
                    let t = cp / (cp - cq);
                    out.push(p + t * (q - p));
                }
            }
        }
        if out.len() < 3 {
            0.0
        } else {
            ConvexPolygon { verts: out }.area().abs()
        }
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        let n = self.verts.len();
        (0..n).all(|i| cross(&self.verts[i], &self.verts[(i + 1) % n], p) >= 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square(c: Vec2, s: f64) -> ConvexPolygon {
        ConvexPolygon::from_points(&[
            c,
            c + Vec2::new(s, 0.0),
            c + Vec2::new(0.0, s),
            c + Vec2::new(s, s),
        ])
    }

    #[test]
    fn compose_matches_sequential_application() {
        let a = Similarity::new(0.5, rotation(0.3), Vec2::new(1.0, -2.0));
        let b = Similarity::new(0.7, reflection(1.1), Vec2::new(0.2, 0.4));
        let x = Vec2::new(0.31, -0.77);
        let lhs = a.compose(&b).apply(&x);
        let rhs = a.apply(&b.apply(&x));
        assert!((lhs - rhs).norm() < 1e-14);
        let back = a.inverse().apply(&a.apply(&x));
        assert!((back - x).norm() < 1e-14);
    }

    #[test]
    fn fixed_point_is_fixed() {
        let s = Similarity::new(1.0 / 3f64.sqrt(), rotation(PI / 6.0), Vec2::new(0.3, 0.1));
        let p = s.fixed_point().unwrap();
        assert!((s.apply(&p) - p).norm() < 1e-14);
    }

    #[test]
    fn hull_and_distances() {
        let a = square(Vec2::zeros(), 1.0);
        assert_eq!(a.verts.len(), 4);
        assert!((a.area() - 1.0).abs() < 1e-15);
        let b = square(Vec2::new(2.0, 0.0), 1.0);
        assert!((a.distance(&b) - 1.0).abs() < 1e-15);
        let c = square(Vec2::new(1.0, 1.0), 1.0);
        assert!(a.distance(&c) < 1e-15);
        assert!(a.intersection_area(&c) < 1e-15);
        let d = square(Vec2::new(0.5, 0.5), 1.0);
        assert!((a.intersection_area(&d) - 0.25).abs() < 1e-14);
        let e = a.transformed(&Similarity::new(1.0, reflection(0.0), Vec2::zeros()));
        assert!(e.area() > 0.0);
    }

    #[test]
    fn orthogonality_guard() {
        let bad = Mat2::new(1.0, 0.1, 0.0, 1.0);
        assert!(Similarity::contraction(0.5, bad, Vec2::zeros()).is_err());
        assert!(Similarity::contraction(1.5, Mat2::identity(), Vec2::zeros()).is_err());
    }
}
