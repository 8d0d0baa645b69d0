//! Composite barycentre rules on attractor cells.

use std::collections::BTreeMap;
use std::ops::{Add, Mul};
use std::sync::{Arc, Mutex};

use crate::error::Result;
use crate::geom::{Similarity, Vec2};
use crate::ifs::IfsAttractor;
use crate::mesh::for_each_leaf;

/// Nodes `x_m` and weights `|Ω_m|` of `Q^{h_q}` on one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<Vec2>,
    pub weights: Vec<f64>,
    pub h_q: f64,
}

pub trait Scalar: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> {}
impl<T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>> Scalar for T {}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Q[F] = Σ |Ω_m| F(x_m)`.
    pub fn apply<T: Scalar>(&self, f: impl Fn(&Vec2) -> T) -> T {
        let mut acc = T::default();
        for (x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(x) * w;
        }
        acc
    }

    /// Image of the rule under a similarity.
    pub fn mapped(&self, s: &Similarity) -> QuadRule {
        let w = s.rho * s.rho;
        QuadRule {
            nodes: self.nodes.iter().map(|x| s.apply(x)).collect(),
            weights: self.weights.iter().map(|v| v * w).collect(),
            h_q: self.h_q * s.rho,
        }
    }
}

/// Tensor rule `Σ Σ |Ω_m||Ω'_m'| G(x_m, x'_m')`, streamed in a fixed order.
pub fn double_apply<T: Scalar>(a: &QuadRule, b: &QuadRule, g: impl Fn(&Vec2, &Vec2) -> T) -> T {
    let mut acc = T::default();
    for (x, &wx) in a.nodes.iter().zip(&a.weights) {
        let mut inner = T::default();
        for (y, &wy) in b.nodes.iter().zip(&b.weights) {
            inner = inner + g(x, y) * wy;
        }
        acc = acc + inner * wx;
    }
    acc
}

/// `Q^{w}` on the reference attractor: the cells of `L_w(Ω)`.
pub fn template_rule(ifs: &IfsAttractor, w: f64) -> Result<QuadRule> {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let x = ifs.barycentre();
    let m = ifs.measure();
    for_each_leaf(ifs, &Similarity::identity(), w, |_, s| {
        nodes.push(s.apply(&x));
        weights.push(s.rho * s.rho * m);
    })?;
    Ok(QuadRule { nodes, weights, h_q: w })
}

/// `Q^{h_q}` on the cell `s(Ω)`, built as `L_{h_q/ρ}(Ω)` mapped by `s`.
pub fn single_rule(ifs: &IfsAttractor, cell: &Similarity, h_q: f64) -> Result<QuadRule> {
    let mut rule = template_rule(ifs, h_q / cell.rho)?.mapped(cell);
    rule.h_q = h_q;
    Ok(rule)
}

/// Memoised reference templates keyed by width.
#[derive(Debug)]
pub struct TemplateCache {
    ifs: Arc<IfsAttractor>,
    map: Mutex<BTreeMap<u64, Arc<QuadRule>>>,
}

impl TemplateCache {
    pub fn new(ifs: Arc<IfsAttractor>) -> Self {
        TemplateCache { ifs, map: Mutex::new(BTreeMap::new()) }
    }

    pub fn ifs(&self) -> &Arc<IfsAttractor> {
        &self.ifs
    }

    pub fn template(&self, w: f64) -> Result<Arc<QuadRule>> {
        let key = w.to_bits();
        if let Some(r) = self.map.lock().unwrap().get(&key) {
            return Ok(Arc::clone(r));
        }
        let r = Arc::new(template_rule(&self.ifs, w)?);
        self.map.lock().unwrap().insert(key, Arc::clone(&r));
        Ok(r)
    }

    pub fn cell_rule(&self, cell: &Similarity, h_q: f64) -> Result<QuadRule> {
        let mut rule = self.template(h_q / cell.rho)?.mapped(cell);
        rule.h_q = h_q;
        Ok(rule)
    }

    /// Rule offsets `x_m - x_cell` and weights, for translation-invariant use.
    pub fn cell_offsets(&self, cell: &Similarity, h_q: f64) -> Result<(Vec<Vec2>, Vec<f64>)> {
        let t = self.template(h_q / cell.rho)?;
        let c = self.ifs.barycentre();
        let w = cell.rho * cell.rho;
        let lin = cell.linear();
        Ok((t.nodes.iter().map(|x| lin * (x - c)).collect(), t.weights.iter().map(|v| v * w).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::Example;

    #[test]
    fn constants_and_affine_exact() {
        let ifs = Example::Fudgeflake.attractor();
        for w in [2.0, 0.5, 0.1] {
            let r = template_rule(&ifs, w).unwrap();
            assert!((r.total_weight() - 3f64.sqrt() / 2.0).abs() < 1e-14);
            let v = r.apply(|x| 2.0 * x.x - 3.0 * x.y + 1.5);
            assert!((v - 1.5 * ifs.measure()).abs() < 1e-13);
        }
    }

    #[test]
    fn separable_double_rule() {
        let ifs = Example::koch().attractor();
        let a = single_rule(&ifs, &ifs.maps()[0], 0.05).unwrap();
        let b = single_rule(&ifs, &ifs.maps()[3], 0.05).unwrap();
        let v = double_apply(&a, &b, |x, y| x.x * y.y);
        let xa = ifs.maps()[0].apply(&ifs.barycentre());
        let xb = ifs.maps()[3].apply(&ifs.barycentre());
        let exact = xa.x * xb.y * a.total_weight() * b.total_weight();
        assert!((v - exact).abs() < 1e-14);
    }
}
