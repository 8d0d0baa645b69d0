//! Geometry-conforming `L_h` meshes of attractor cells.

use std::sync::Arc;

use serde::Serialize;

use crate::builtin::Example;
use crate::error::{Error, Result};
use crate::geom::{ConvexPolygon, Similarity, Vec2};
use crate::ifs::{IfsAttractor, Word};

const MAX_ELEMENTS: usize = 10_000_000;
/// Relative slack in the leaf test `diam_m <= h`, so that `h = h_l` computed in
/// floating point reproduces the exact level.
pub(crate) const WIDTH_SLACK: f64 = 1e-10;

/// One cell `Ω_m = s_m(Ω)`.
#[derive(Clone, Debug)]
pub struct MeshElement {
    pub word: Word,
    pub map: Similarity,
    pub diam: f64,
    pub measure: f64,
    pub node: Vec2,
}

impl MeshElement {
    pub fn new(ifs: &IfsAttractor, word: Word, map: Similarity) -> Self {
        MeshElement {
            diam: map.rho * ifs.diam(),
            measure: map.rho * map.rho * ifs.measure(),
            node: map.apply(&ifs.barycentre()),
            word,
            map,
        }
    }

    pub fn hull(&self, ifs: &IfsAttractor) -> ConvexPolygon {
        ifs.hull().transformed(&self.map)
    }
}

#[derive(Clone, Debug)]
pub struct LhMesh {
    ifs: Arc<IfsAttractor>,
    h: f64,
    level: Option<u32>,
    elements: Vec<MeshElement>,
}

/// Depth-first enumeration of `L_h(s(Ω))` in lexicographic word order.
/// `visit` receives the word relative to `s` and the composed map.
pub(crate) fn for_each_leaf(
    ifs: &IfsAttractor,
    base: &Similarity,
    h: f64,
    mut visit: impl FnMut(&[u16], &Similarity),
) -> Result<usize> {
    let limit = h * (1.0 + WIDTH_SLACK);
    let diam = ifs.diam();
    let maps = ifs.maps();
    let mut count = 0usize;
    let mut word: Vec<u16> = Vec::new();
    let mut stack: Vec<Similarity> = vec![*base];
    let mut next: Vec<u16> = vec![0];
    if base.rho * diam <= limit {
        visit(&word, base);
        return Ok(1);
    }
    // Each stack frame holds a cell to be subdivided and the next child letter.
    while let Some(&letter) = next.last() {
        if letter as usize == maps.len() {
            next.pop();
            stack.pop();
            word.pop();
            continue;
        }
        *next.last_mut().unwrap() += 1;
        let parent = stack.last().unwrap();
        let child = parent.compose(&maps[letter as usize]);
        word.push(letter);
        if child.rho * diam <= limit {
            visit(&word, &child);
            count += 1;
            if count > MAX_ELEMENTS {
                return Err(Error::Resource(format!("L_h mesh exceeds {MAX_ELEMENTS} elements")));
            }
            word.pop();
        } else {
            stack.push(child);
            next.push(0);
        }
    }
    Ok(count)
}

/// `L_h(Ω)`: the words whose cells first reach diameter `<= h`.
pub fn build_lh_mesh(ifs: &Arc<IfsAttractor>, h: f64) -> Result<LhMesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Input(format!("mesh width must be positive, got {h}")));
    }
    let mut elements = Vec::new();
    for_each_leaf(ifs, &Similarity::identity(), h, |w, s| {
        elements.push(MeshElement::new(ifs, Word(w.to_vec()), *s));
    })?;
    Ok(LhMesh { ifs: Arc::clone(ifs), h, level: None, elements })
}

/// `L_{h_l}` of a built-in example, tagged with its level.
pub fn example_mesh(example: &Example, level: u32) -> Result<LhMesh> {
    if level > example.level_cap() {
        return Err(Error::Config(format!(
            "level {level} exceeds the cap {} for {}",
            example.level_cap(),
            example.name()
        )));
    }
    let ifs = Arc::new(example.attractor());
    let mut mesh = build_lh_mesh(&ifs, example.level_width(level))?;
    mesh.level = Some(level);
    Ok(mesh)
}

impl LhMesh {
    /// A mesh of explicitly given cells of a reference attractor (used for prefractal tilings).
    pub fn from_elements(ifs: Arc<IfsAttractor>, elements: Vec<MeshElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Input("mesh has no elements".into()));
        }
        let h = elements.iter().map(|e| e.diam).fold(0.0, f64::max);
        Ok(LhMesh { ifs, h, level: None, elements })
    }

    pub fn with_level(mut self, level: u32) -> Self {
        self.level = Some(level);
        self
    }

    pub fn ifs(&self) -> &Arc<IfsAttractor> {
        &self.ifs
    }
    /// The width the mesh was built for (or the largest cell diameter).
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn level(&self) -> Option<u32> {
        self.level
    }
    pub fn elements(&self) -> &[MeshElement] {
        &self.elements
    }
    pub fn len(&self) -> usize {
        self.elements.len()
    }
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `|Ω_i|^{1/2}`, the `L²` norms of the indicator functions.
    pub fn norms(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.measure.sqrt()).collect()
    }

    pub fn total_measure(&self) -> f64 {
        self.elements.iter().map(|e| e.measure).sum()
    }

    pub fn max_diam(&self) -> f64 {
        self.elements.iter().map(|e| e.diam).fold(0.0, f64::max)
    }

    pub fn hulls(&self) -> Vec<ConvexPolygon> {
        self.elements.iter().map(|e| e.hull(&self.ifs)).collect()
    }

    /// Index of the element containing `x` by its cell hull, if any. Hulls of
    /// neighbouring cells may overlap; the first match in element order wins.
    pub fn locate(&self, x: &Vec2) -> Option<usize> {
        let r = self.ifs.radius();
        self.elements.iter().position(|e| {
            (x - e.node).norm() <= e.map.rho * r * (1.0 + 1e-12) && e.hull(&self.ifs).contains(x)
        })
    }
}

/// Same IFS by map data (names are not compared).
pub(crate) fn same_ifs(a: &IfsAttractor, b: &IfsAttractor) -> bool {
    a.maps().len() == b.maps().len() && a.maps().iter().zip(b.maps()).all(|(s, t)| s == t)
}

/// Parent map: `parent[f]` is the coarse element whose word is a prefix of fine element `f`.
pub fn nested_restriction(coarse: &LhMesh, fine: &LhMesh) -> Result<Vec<usize>> {
    if !same_ifs(coarse.ifs(), fine.ifs()) {
        return Err(Error::Structural("meshes belong to different attractors".into()));
    }
    let mut parent = Vec::with_capacity(fine.len());
    let mut c = 0usize;
    for (f, e) in fine.elements().iter().enumerate() {
        // Both meshes are in lexicographic order, so the parent index is non-decreasing.
        while c < coarse.len() && !coarse.elements[c].word.is_prefix_of(&e.word) {
            c += 1;
        }
        if c == coarse.len() {
            return Err(Error::Structural(format!("fine element {f} ({}) has no coarse ancestor", e.word)));
        }
        parent.push(c);
    }
    Ok(parent)
}

/// One row of the mesh CSV export.
#[derive(Clone, Debug, Serialize)]
pub struct MeshRow {
    pub index_word: String,
    pub node_x: f64,
    pub node_y: f64,
    pub diam: f64,
    pub measure: f64,
    pub family: String,
    pub a1: Option<i64>,
    pub a2: Option<i64>,
}
