//! Fully discrete Galerkin system: matrix `Ã`, right-hand side `g̃` and functionals `j̃`.
//!
//! With orthonormal basis `φ_i = χ_{Ω_i} / |Ω_i|^{1/2}`,
//! `Ã_ij = δ_ij - m k² K_ij`, where `K_ij` approximates
//! `∫_{Ω_i}∫_{Ω_j} Φ / (|Ω_i||Ω_j|)^{1/2}`: by `Q^{h_r}[Φ]` for regular pairs and by
//! `c₂ G̃⁰ + G̃*` (canonical `Φ₀` integral plus `Q^{h_*}[Φ*]`) for singular pairs.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builtin::Example;
use crate::classify::{classify_by_hulls, classify_pairs, ClassifyMode, InteractionSplit, TOUCH_TOL};
use crate::error::{Error, Result};
use crate::geom::{Similarity, Vec2};
use crate::kernel::{phi_r, phi_star_r, WaveParams, C2};
use crate::lattice::{aligned_rule_maps, lattice_coords, LatticeLayout, OffsetKey};
use crate::mesh::LhMesh;
use crate::quadrature::{double_apply, QuadRule, TemplateCache};
use crate::singular::{CanonicalSystem, ClosureOptions};

/// Quadrature widths for one mesh width `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadPolicy {
    pub alpha: u8,
    pub h: f64,
    pub h0: f64,
    pub h_r: f64,
    pub h_s: f64,
    pub h_star: f64,
    pub h_g: f64,
    pub h_j: f64,
}

impl QuadPolicy {
    /// `α = 1`: `(h_r, h_s, h_*, h_g, h_J) = (h, h₀, h, h, h)`;
    /// `α = 2`: `(h^{3/2}, h^{1/2}, h, h, h)` with plain powers of `h`.
    pub fn new(alpha: u8, h: f64, h0: f64) -> Result<Self> {
        if !(h > 0.0 && h0 > 0.0) {
            return Err(Error::Config("quadrature widths need h > 0 and h0 > 0".into()));
        }
        match alpha {
            1 => Ok(QuadPolicy { alpha, h, h0, h_r: h, h_s: h0, h_star: h, h_g: h, h_j: h }),
            2 => Ok(QuadPolicy { alpha, h, h0, h_r: h.powf(1.5), h_s: h.sqrt(), h_star: h, h_g: h, h_j: h }),
            _ => Err(Error::Config(format!("alpha must be 1 or 2, got {alpha}"))),
        }
    }

    pub fn with_h_j(mut self, h_j: f64) -> Self {
        self.h_j = h_j;
        self
    }

    /// The schedule as formulas, for config echoes.
    pub fn formulas(&self) -> [(&'static str, &'static str); 5] {
        match self.alpha {
            1 => [("h_r", "h"), ("h_s", "h0"), ("h_star", "h"), ("h_g", "h"), ("h_J", "h")],
            _ => [("h_r", "h^(3/2)"), ("h_s", "h^(1/2)"), ("h_star", "h"), ("h_g", "h"), ("h_J", "h")],
        }
    }
}

/// Far-field constant `c = e^{iπ/4}/√(8π)`, so that `u^s(x) ~ e^{ikr}/√r · u^∞(x̂)`.
pub fn far_field_constant() -> Complex64 {
    Complex64::from_polar(1.0 / (8.0 * PI).sqrt(), PI / 4.0)
}

/// A mesh with everything needed to assemble its Galerkin system.
#[derive(Debug)]
pub struct Problem {
    pub mesh: LhMesh,
    pub example: Option<Example>,
    pub layout: Option<LatticeLayout>,
    pub split: InteractionSplit,
    pub canonical: Arc<CanonicalSystem>,
    pub policy: QuadPolicy,
    pub params: WaveParams,
    templates: TemplateCache,
    norms: Vec<f64>,
    rule_maps: Vec<Similarity>,
}

/// One representative pair per lattice key, or every pair without a layout.
fn singular_representatives(split: &InteractionSplit, layout: Option<&LatticeLayout>) -> Vec<(usize, usize)> {
    match layout {
        Some(l) => {
            let mut seen = std::collections::BTreeMap::<OffsetKey, (usize, usize)>::new();
            for (i, j) in split.singular_pairs() {
                seen.entry(l.key(i, j)).or_insert((i, j));
            }
            seen.into_values().collect()
        }
        None => split.singular_pairs().filter(|(i, j)| i <= j).collect(),
    }
}

impl Problem {
    /// Example mesh (lattice classification) or general mesh (hull classification).
    pub fn new(
        mesh: LhMesh,
        example: Option<Example>,
        params: WaveParams,
        alpha: u8,
        canonical: Option<Arc<CanonicalSystem>>,
    ) -> Result<Self> {
        let layout = match (&example, mesh.level()) {
            (Some(ex), Some(_)) => Some(lattice_coords(ex, &mesh)?),
            _ => None,
        };
        let split = match (&example, &layout) {
            (Some(ex), Some(_)) => classify_pairs(&mesh, Some(ex), ClassifyMode::Lattice)?,
            _ => classify_by_hulls(&mesh, TOUCH_TOL),
        };
        Self::with_parts(mesh, example, layout, split, params, alpha, canonical)
    }

    /// Mesh with an explicit lattice layout; touching pairs from hulls.
    pub fn with_layout(
        mesh: LhMesh,
        layout: LatticeLayout,
        params: WaveParams,
        alpha: u8,
        canonical: Option<Arc<CanonicalSystem>>,
    ) -> Result<Self> {
        let split = classify_by_hulls(&mesh, TOUCH_TOL);
        Self::with_parts(mesh, None, Some(layout), split, params, alpha, canonical)
    }

    fn with_parts(
        mesh: LhMesh,
        example: Option<Example>,
        layout: Option<LatticeLayout>,
        split: InteractionSplit,
        params: WaveParams,
        alpha: u8,
        canonical: Option<Arc<CanonicalSystem>>,
    ) -> Result<Self> {
        params.validate()?;
        let ifs = Arc::clone(mesh.ifs());
        let policy = QuadPolicy::new(alpha, mesh.h().min(ifs.diam()), ifs.diam())?;
        let reps = singular_representatives(&split, layout.as_ref());
        let el = mesh.elements();
        let pairs: Vec<(Similarity, Similarity)> = reps.iter().map(|&(i, j)| (el[i].map, el[j].map)).collect();
        let canonical = match canonical {
            Some(c) if pairs.iter().all(|(a, b)| c.find_class(a, b).is_some()) => c,
            _ => Arc::new(CanonicalSystem::derive_covering(&ifs, &pairs, ClosureOptions::default())?),
        };
        let norms = mesh.norms();
        let aligned = layout.as_ref().and_then(|l| aligned_rule_maps(&mesh, l));
        let layout = if aligned.is_some() { layout } else { None };
        let rule_maps = aligned.unwrap_or_else(|| mesh.elements().iter().map(|e| e.map).collect());
        Ok(Problem {
            rule_maps,
            templates: TemplateCache::new(Arc::clone(&ifs)),
            mesh,
            example,
            layout,
            split,
            canonical,
            policy,
            params,
            norms,
        })
    }

    pub fn n(&self) -> usize {
        self.mesh.len()
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn templates(&self) -> &TemplateCache {
        &self.templates
    }

    /// `m k²`.
    pub fn mk2(&self) -> Complex64 {
        self.params.m * self.params.k * self.params.k
    }

    fn map(&self, i: usize) -> &Similarity {
        &self.mesh.elements()[i].map
    }

    /// Map used to place quadrature rules on cell `i`; within a lattice family
    /// these share one linear part.
    pub fn rule_map(&self, i: usize) -> &Similarity {
        &self.rule_maps[i]
    }

    pub fn cell_rule(&self, i: usize, h_q: f64) -> Result<QuadRule> {
        self.templates.cell_rule(&self.rule_maps[i], h_q)
    }

    /// `Q^{h_r}_{Ω_i,Ω_j}[Φ]` for a regular pair given precomputed rules.
    fn regular_from_rules(&self, a: &QuadRule, b: &QuadRule) -> Complex64 {
        let k = self.params.k;
        double_apply(a, b, |x, y| phi_r(k, (x - y).norm()))
    }

    fn singular_from_rules(&self, i: usize, j: usize, a: &QuadRule, b: &QuadRule) -> Result<Complex64> {
        let k = self.params.k;
        let g0 = self.canonical.log_integral(self.map(i), self.map(j), self.policy.h_s)?;
        let gs = double_apply(a, b, |x, y| phi_star_r(k, (x - y).norm()));
        Ok(C2 * g0 + gs)
    }

    /// `K_ij` (normalised interaction) for one pair.
    pub fn interaction(&self, i: usize, j: usize) -> Result<Complex64> {
        let nn = self.norms[i] * self.norms[j];
        if self.split.is_singular(i, j) {
            let a = self.cell_rule(i, self.policy.h_star)?;
            let b = self.cell_rule(j, self.policy.h_star)?;
            Ok(self.singular_from_rules(i, j, &a, &b)? / nn)
        } else {
            let a = self.cell_rule(i, self.policy.h_r)?;
            let b = self.cell_rule(j, self.policy.h_r)?;
            Ok(self.regular_from_rules(&a, &b) / nn)
        }
    }

    pub fn matrix_entry(&self, i: usize, j: usize) -> Result<Complex64> {
        let d = if i == j { 1.0 } else { 0.0 };
        Ok(Complex64::new(d, 0.0) - self.mk2() * self.interaction(i, j)?)
    }

    /// Dense `Ã` by direct per-entry quadrature (upper triangle mirrored).
    pub fn assemble_dense(&self) -> Result<DMatrix<Complex64>> {
        let n = self.n();
        let rules_r: Vec<QuadRule> = (0..n).map(|i| self.cell_rule(i, self.policy.h_r)).collect::<Result<_>>()?;
        let rules_s: Vec<QuadRule> = (0..n).map(|i| self.cell_rule(i, self.policy.h_star)).collect::<Result<_>>()?;
        let rows: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (i..n)
                    .map(|j| {
                        let v = if self.split.is_singular(i, j) {
                            self.singular_from_rules(i, j, &rules_s[i], &rules_s[j])?
                        } else {
                            self.regular_from_rules(&rules_r[i], &rules_r[j])
                        };
                        Ok(v / (self.norms[i] * self.norms[j]))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mk2 = self.mk2();
        let mut a = DMatrix::<Complex64>::identity(n, n);
        for (i, row) in rows.iter().enumerate() {
            for (off, v) in row.iter().enumerate() {
                let j = i + off;
                a[(i, j)] -= mk2 * v;
                if j != i {
                    a[(j, i)] -= mk2 * v;
                }
            }
        }
        Ok(a)
    }

    /// `g̃_i = Q^{h_g}_{Ω_i}[u^i] / |Ω_i|^{1/2}`.
    pub fn assemble_rhs(&self) -> Result<DVector<Complex64>> {
        let mut g = DVector::zeros(self.n());
        for i in 0..self.n() {
            let q = self.cell_rule(i, self.policy.h_g)?;
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, &w) in q.nodes.iter().zip(&q.weights) {
                acc += self.params.incident_field(x)? * w;
            }
            g[i] = acc / self.norms[i];
        }
        Ok(g)
    }

    /// Far-field functional `j̃_i(θ)` with density `c k^{3/2} m e^{-ik x̂·y}`.
    pub fn far_field_vector(&self, theta: f64, h_j: f64) -> Result<DVector<Complex64>> {
        let k = self.params.k;
        let dir = Vec2::new(theta.cos(), theta.sin());
        let pre = far_field_constant() * k.powf(1.5) * self.params.m;
        let mut j = DVector::zeros(self.n());
        for i in 0..self.n() {
            let q = self.cell_rule(i, h_j)?;
            let v = q.apply(|y| Complex64::from_polar(1.0, -k * dir.dot(y)));
            j[i] = pre * v / self.norms[i];
        }
        Ok(j)
    }

    /// Scattered-field functional `j̃_i(x₀)` with density `k² m Φ(x₀, y)`.
    /// Fails with [`Error::Collision`] if `x₀` is within `1e-12·h` of a node.
    pub fn scattered_vector(&self, x0: &Vec2, h_j: f64) -> Result<DVector<Complex64>> {
        let k = self.params.k;
        let tol = 1e-12 * self.mesh.h();
        let mk2 = self.mk2();
        let mut j = DVector::zeros(self.n());
        for i in 0..self.n() {
            let q = self.cell_rule(i, h_j)?;
            let mut acc = Complex64::new(0.0, 0.0);
            for (y, &w) in q.nodes.iter().zip(&q.weights) {
                let r = (x0 - y).norm();
                if r <= tol {
                    return Err(Error::Collision([x0.x, x0.y]));
                }
                acc += phi_r(k, r) * w;
            }
            j[i] = mk2 * acc / self.norms[i];
        }
        Ok(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::example_mesh;

    #[test]
    fn policy_table() {
        let p = QuadPolicy::new(1, 0.1, 1.3).unwrap();
        assert_eq!((p.h_r, p.h_s, p.h_star, p.h_g, p.h_j), (0.1, 1.3, 0.1, 0.1, 0.1));
        let p = QuadPolicy::new(2, 0.04, 1.3).unwrap();
        assert!((p.h_r - 0.008).abs() < 1e-15 && (p.h_s - 0.2).abs() < 1e-15);
        assert!(QuadPolicy::new(3, 0.1, 1.0).is_err());
    }

    #[test]
    fn zero_contrast_is_identity() {
        let ex = Example::Fudgeflake;
        let params = WaveParams::plane_wave(5.0, Complex64::new(0.0, 0.0), [0.0, 1.0]).unwrap();
        let p = Problem::new(example_mesh(&ex, 2).unwrap(), Some(ex), params, 1, None).unwrap();
        let a = p.assemble_dense().unwrap();
        assert_eq!(a, DMatrix::identity(9, 9));
    }
}
