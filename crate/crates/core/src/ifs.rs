//! Iterated function systems of contracting similarities and their attractors.
//!
//! An [`IfsAttractor`] stores the maps together with the attractor metadata the
//! discretisation needs: measure, diameter, barycentre, a convex hull, the
//! bounding ball, and the group of isometries that map the attractor onto
//! itself.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{reflection, rotation, ConvexPolygon, Mat2, Similarity, Vec2};

/// A vector index `m = (m1, ..., ml)`, stored zero-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<u16>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Build from one-based letters, as in the usual word notation.
    pub fn from_one_based(letters: &[u16]) -> Self {
        Word(letters.iter().map(|&l| l - 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, i: u16) -> Word {
        let mut v = self.0.clone();
        v.push(i);
        Word(v)
    }

    pub fn concat(&self, suffix: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&suffix.0);
        Word(v)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl fmt::Display for Word {
    /// One-based letters joined by dots; the empty word prints as `-`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "-");
        }
        let parts: Vec<String> = self.0.iter().map(|l| (l + 1).to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// Attractor of an IFS satisfying the open set condition (assumed, not checked).
#[derive(Clone, Debug)]
pub struct IfsAttractor {
    name: String,
    maps: Vec<Similarity>,
    diam: f64,
    measure: f64,
    barycentre: Vec2,
    boundary_dim: Option<f64>,
    fixed_points: Vec<Vec2>,
    hull: ConvexPolygon,
    symmetries: Vec<Similarity>,
    radius: f64,
}

/// Unique `d > 0` with `Σ rho_i^d = 1`.
pub fn similarity_dimension(rhos: &[f64]) -> Result<f64> {
    if rhos.len() < 2 || rhos.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::Input("similarity dimension needs M >= 2 factors in (0,1)".into()));
    }
    let f = |d: f64| rhos.iter().map(|r| r.powf(d)).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numeric("similarity dimension bracket failed".into()));
        }
    }
    let mut d = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fd = f(d);
        if fd.abs() < 1e-15 {
            return Ok(d);
        }
        if fd > 0.0 {
            lo = d;
        } else {
            hi = d;
        }
        let df: f64 = rhos.iter().map(|r| r.powf(d) * r.ln()).sum();
        let newton = d - fd / df;
        d = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 {
            break;
        }
    }
    if f(d).abs() < 1e-13 {
        Ok(d)
    } else {
        Err(Error::Numeric("similarity dimension iteration did not converge".into()))
    }
}

/// `x_Ω = [I - Σ rho_j³ A_j]⁻¹ Σ rho_j² δ_j`.
pub fn barycentre_of(maps: &[Similarity]) -> Result<Vec2> {
    let mut m = Mat2::identity();
    let mut b = Vec2::zeros();
    for s in maps {
        m -= s.rho.powi(3) * s.rot;
        b += s.rho * s.rho * s.shift;
    }
    m.try_inverse()
        .map(|inv| inv * b)
        .ok_or_else(|| Error::Numeric("barycentre system is singular".into()))
}

fn spectral_norm(m: &Mat2) -> f64 {
    let mtm = m.transpose() * m;
    let tr = mtm.trace();
    let det = mtm.determinant();
    (0.5 * (tr + (tr * tr - 4.0 * det).max(0.0).sqrt())).sqrt()
}

/// Convex hull of the attractor by iterating `V <- hull(∪ s_i(V))` from the fixed points.
fn attractor_hull(maps: &[Similarity], fixed: &[Vec2]) -> ConvexPolygon {
    let rho_max = maps.iter().map(|s| s.rho).fold(0.0, f64::max);
    let iters = ((1e-17_f64).ln() / rho_max.ln()).ceil() as usize + 2;
    let mut poly = ConvexPolygon::from_points(fixed);
    let scale = poly.diameter().max(fixed.iter().map(|p| p.norm()).fold(1e-300, f64::max));
    for _ in 0..iters.min(400) {
        let pts: Vec<Vec2> = maps.iter().flat_map(|s| poly.verts.iter().map(move |v| s.apply(v))).collect();
        poly = ConvexPolygon::from_points(&pts).simplified(1e-14 * scale);
    }
    poly.simplified(1e-12 * scale)
}

impl IfsAttractor {
    /// Build and validate. `diam` defaults to the diameter of the attractor's convex hull.
    pub fn new(
        name: impl Into<String>,
        maps: Vec<Similarity>,
        measure: f64,
        diam: Option<f64>,
        boundary_dim: Option<f64>,
    ) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::Input("an IFS needs at least two maps".into()));
        }
        for s in &maps {
            if !(s.rho > 0.0 && s.rho < 1.0) {
                return Err(Error::Input(format!("contraction factor {} outside (0,1)", s.rho)));
            }
            s.check_orthogonal()?;
        }
        let rhos: Vec<f64> = maps.iter().map(|s| s.rho).collect();
        let d = similarity_dimension(&rhos)?;
        if (d - 2.0).abs() > 1e-10 {
            return Err(Error::Input(format!("similarity dimension {d} != 2: not a 2-attractor")));
        }
        if !(measure > 0.0) {
            return Err(Error::Input("attractor measure must be positive".into()));
        }
        let barycentre = barycentre_of(&maps)?;
        let fixed_points = maps.iter().map(|s| s.fixed_point()).collect::<Result<Vec<_>>>()?;
        let hull = attractor_hull(&maps, &fixed_points);
        let diam = match diam {
            Some(d) if d > 0.0 => d,
            Some(_) => return Err(Error::Input("attractor diameter must be positive".into())),
            None => hull.diameter(),
        };
        let mut ifs = IfsAttractor {
            name: name.into(),
            maps,
            diam,
            measure,
            barycentre,
            boundary_dim,
            fixed_points,
            hull,
            symmetries: Vec::new(),
            radius: 0.0,
        };
        ifs.radius = ifs.bounding_radius(&barycentre);
        ifs.symmetries = ifs.detect_symmetries();
        Ok(ifs)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn maps(&self) -> &[Similarity] {
        &self.maps
    }
    pub fn num_maps(&self) -> usize {
        self.maps.len()
    }
    pub fn diam(&self) -> f64 {
        self.diam
    }
    pub fn measure(&self) -> f64 {
        self.measure
    }
    pub fn barycentre(&self) -> Vec2 {
        self.barycentre
    }
    pub fn boundary_dim(&self) -> Option<f64> {
        self.boundary_dim
    }
    pub fn fixed_points(&self) -> &[Vec2] {
        &self.fixed_points
    }
    /// Convex hull of the attractor (vertices accurate to ~1e-12·diam).
    pub fn hull(&self) -> &ConvexPolygon {
        &self.hull
    }
    /// Isometries `g` with `g(K) = K`, identity first.
    pub fn symmetries(&self) -> &[Similarity] {
        &self.symmetries
    }
    /// Radius of the bounding ball centred at the barycentre.
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn rho_min(&self) -> f64 {
        self.maps.iter().map(|s| s.rho).fold(f64::INFINITY, f64::min)
    }
    pub fn rho_max(&self) -> f64 {
        self.maps.iter().map(|s| s.rho).fold(0.0, f64::max)
    }

    pub fn similarity_dimension(&self) -> Result<f64> {
        similarity_dimension(&self.maps.iter().map(|s| s.rho).collect::<Vec<_>>())
    }

    /// `r(x) = μ* ϱ(x) / (1 - ρ*)`; the attractor lies in the closed ball of this radius about `x`.
    pub fn bounding_radius(&self, x: &Vec2) -> f64 {
        let rho_star = self.rho_max();
        let mu_star = self
            .maps
            .iter()
            .map(|s| spectral_norm(&(Mat2::identity() - s.linear())))
            .fold(0.0, f64::max);
        let varrho = self.fixed_points.iter().map(|p| (p - x).norm()).fold(0.0, f64::max);
        mu_star * varrho / (1.0 - rho_star)
    }

    /// `s_m = s_{m1} ∘ ... ∘ s_{ml}`.
    pub fn compose(&self, word: &Word) -> Result<Similarity> {
        let mut s = Similarity::identity();
        for &l in &word.0 {
            let map = self
                .maps
                .get(l as usize)
                .ok_or_else(|| Error::Input(format!("word letter {} exceeds M = {}", l + 1, self.maps.len())))?;
            s = s.compose(map);
        }
        Ok(s)
    }

    /// Barycentres of all cells at the given depth, in lexicographic word order.
    pub fn attractor_point_cloud(&self, depth: usize) -> Result<Vec<Vec2>> {
        let count = (self.maps.len() as f64).powi(depth as i32);
        if count > 1e7 {
            return Err(Error::Resource(format!("point cloud of {count:.0} points exceeds 1e7")));
        }
        let mut pts = vec![self.barycentre];
        for _ in 0..depth {
            // Prepending maps keeps lexicographic order on the outermost letter.
            pts = self.maps.iter().flat_map(|s| pts.iter().map(move |p| s.apply(p))).collect();
        }
        Ok(pts)
    }

    /// Image of the attractor under a global similarity `g`: maps become `g s_i g⁻¹`.
    pub fn transformed(&self, g: &Similarity, name: impl Into<String>) -> Result<IfsAttractor> {
        let maps = self.maps.iter().map(|s| s.conjugate(g)).collect();
        IfsAttractor::new(
            name,
            maps,
            self.measure * g.rho * g.rho,
            Some(self.diam * g.rho),
            self.boundary_dim,
        )
    }

    /// Isometry about the barycentre with linear part `q`.
    fn about_barycentre(&self, q: Mat2) -> Similarity {
        Similarity::new(1.0, q, self.barycentre - q * self.barycentre)
    }

    /// Greatest set `C` of candidate isometries such that for every `g ∈ C` the
    /// assignment `i -> j` with `s_j⁻¹ g s_i ∈ C` is a permutation of the maps.
    /// Every `g` in that set satisfies `g(K) = K` by a contraction argument on
    /// the Hausdorff distance.
    fn detect_symmetries(&self) -> Vec<Similarity> {
        let tol = 1e-9;
        let mut lin: Vec<Mat2> = vec![Mat2::identity()];
        let push = |lin: &mut Vec<Mat2>, q: Mat2| {
            if !lin.iter().any(|p| (p - q).norm() < tol) {
                lin.push(q);
            }
        };
        for n in 2..=12u32 {
            for k in 1..n {
                push(&mut lin, rotation(2.0 * std::f64::consts::PI * k as f64 / n as f64));
            }
        }
        let angles: Vec<f64> = self
            .fixed_points
            .iter()
            .filter_map(|p| {
                let d = p - self.barycentre;
                (d.norm() > 1e-9 * self.diam).then(|| d.y.atan2(d.x))
            })
            .collect();
        for (i, a) in angles.iter().enumerate() {
            push(&mut lin, reflection(*a));
            push(&mut lin, reflection(a + std::f64::consts::FRAC_PI_2));
            for b in &angles[i + 1..] {
                push(&mut lin, reflection(0.5 * (a + b)));
                push(&mut lin, reflection(0.5 * (a + b) + std::f64::consts::FRAC_PI_2));
            }
        }
        let mut alive = vec![true; lin.len()];
        let member = |alive: &[bool], h: &Similarity| -> bool {
            if (h.rho - 1.0).abs() > tol || (h.apply(&self.barycentre) - self.barycentre).norm() > tol * self.diam {
                return false;
            }
            lin.iter().zip(alive).any(|(q, &a)| a && (q - h.rot).norm() < tol)
        };
        loop {
            let mut changed = false;
            for gi in 1..lin.len() {
                if !alive[gi] {
                    continue;
                }
                let g = self.about_barycentre(lin[gi]);
                let mut used = vec![false; self.maps.len()];
                let mut ok = true;
                for si in &self.maps {
                    let gs = g.compose(si);
                    let hit = self.maps.iter().enumerate().find(|(j, sj)| {
                        !used[*j] && (sj.rho - si.rho).abs() < tol && member(&alive, &sj.inverse().compose(&gs))
                    });
                    match hit {
                        Some((j, _)) => used[j] = true,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    alive[gi] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        lin.iter()
            .zip(&alive)
            .filter(|(_, &a)| a)
            .map(|(q, _)| self.about_barycentre(*q))
            .collect()
    }
}

/// IFS definition file format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IfsFile {
    pub name: String,
    pub maps: Vec<MapSpec>,
    pub measure: Option<f64>,
    pub diam: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapSpec {
    pub rho: f64,
    pub rot: [[f64; 2]; 2],
    pub shift: [f64; 2],
}

impl IfsFile {
    pub fn into_attractor(self) -> Result<IfsAttractor> {
        let measure = self
            .measure
            .ok_or_else(|| Error::Config(format!("IFS '{}' needs a declared measure", self.name)))?;
        let maps = self
            .maps
            .iter()
            .map(|m| {
                let rot = Mat2::new(m.rot[0][0], m.rot[0][1], m.rot[1][0], m.rot[1][1]);
                Similarity::contraction(m.rho, rot, Vec2::new(m.shift[0], m.shift[1]))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Config(e.to_string()))?;
        IfsAttractor::new(self.name, maps, measure, self.diam, None).map_err(|e| Error::Config(e.to_string()))
    }
}

/// The unit square `[0,1]²` as a 4-map 2-attractor.
pub fn unit_square() -> IfsAttractor {
    let maps = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)]
        .iter()
        .map(|&(x, y)| Similarity::new(0.5, Mat2::identity(), Vec2::new(x, y)))
        .collect();
    IfsAttractor::new("unit-square", maps, 1.0, Some(2f64.sqrt()), Some(1.0)).expect("valid IFS")
}

/// Equilateral triangle of side `side`, centroid at the origin, one vertex at
/// angle `-π/2`, as the 4-map 2-attractor (three corner maps and the rotated
/// central map).
pub fn equilateral_triangle(side: f64) -> IfsAttractor {
    let r = side / 3f64.sqrt();
    let verts: Vec<Vec2> = [-0.5, 1.0 / 6.0, 5.0 / 6.0]
        .iter()
        .map(|t: &f64| Vec2::new((t * std::f64::consts::PI).cos(), (t * std::f64::consts::PI).sin()) * r)
        .collect();
    let mut maps: Vec<Similarity> =
        verts.iter().map(|v| Similarity::new(0.5, Mat2::identity(), 0.5 * v)).collect();
    maps.push(Similarity::new(0.5, rotation(std::f64::consts::PI), Vec2::zeros()));
    IfsAttractor::new("triangle", maps, 3f64.sqrt() / 4.0 * side * side, Some(side), Some(1.0))
        .expect("valid IFS")
}
