//! Matrix-free Galerkin operator on lattice meshes.
//!
//! Regular interactions depend only on the key `(F, F', Δa)`, so they are
//! tabulated once per key and applied as a 2D FFT convolution for every family
//! pair. Touching pairs are excluded from the table and applied as a sparse
//! correction.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::assembly::Problem;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::kernel::phi_r;
use crate::lattice::OffsetKey;
use crate::solve::LinearOperator;

/// Merged node differences `o_m - o'_n` with summed weights `w_m w'_n`.
fn merged_differences(a: &(Vec<Vec2>, Vec<f64>), b: &(Vec<Vec2>, Vec<f64>), quantum: f64) -> Vec<(Vec2, f64)> {
    let mut map: BTreeMap<(i64, i64), (Vec2, f64)> = BTreeMap::new();
    for (x, wx) in a.0.iter().zip(&a.1) {
        for (y, wy) in b.0.iter().zip(&b.1) {
            let d = x - y;
            let key = ((d.x / quantum).round() as i64, (d.y / quantum).round() as i64);
            map.entry(key).or_insert((d, 0.0)).1 += wx * wy;
        }
    }
    map.into_values().collect()
}

/// Smallest `2^a 3^b 5^c` that is at least `n`.
fn fft_size(n: usize) -> usize {
    (n.max(1)..)
        .find(|&m| {
            let mut r = m;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            r == 1
        })
        .expect("unbounded search")
}

struct Fft2 {
    p1: usize,
    p2: usize,
    fwd1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(p1: usize, p2: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            p1,
            p2,
            fwd1: planner.plan_fft_forward(p1),
            fwd2: planner.plan_fft_forward(p2),
            inv1: planner.plan_fft_inverse(p1),
            inv2: planner.plan_fft_inverse(p2),
        }
    }

    /// In-place 2D transform of a row-major `p1 × p2` grid (index `i1 * p2 + i2`).
    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let (f1, f2) = if inverse { (&self.inv1, &self.inv2) } else { (&self.fwd1, &self.fwd2) };
        f2.process(data);
        let mut col = vec![Complex64::new(0.0, 0.0); self.p1];
        for i2 in 0..self.p2 {
            for i1 in 0..self.p1 {
                col[i1] = data[i1 * self.p2 + i2];
            }
            f1.process(&mut col);
            for i1 in 0..self.p1 {
                data[i1 * self.p2 + i2] = col[i1];
            }
        }
    }
}

/// `Ã = I - m k² K` applied through tabulated lattice interactions.
pub struct LatticeOperator {
    n: usize,
    mk2: Complex64,
    families: usize,
    /// Per family: `(element index, grid index)`.
    members: Vec<Vec<(usize, usize)>>,
    fft: Fft2,
    /// Transformed kernels, `[F * families + F']`; `None` when the pair never occurs.
    kernels: Vec<Option<Vec<Complex64>>>,
    /// Regular interaction table `K` keyed by `(F, F', Δa)`.
    table: BTreeMap<OffsetKey, Complex64>,
    /// Singular interactions `(i, j, K_ij)`.
    sparse: Vec<(usize, usize, Complex64)>,
}

impl std::fmt::Debug for LatticeOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticeOperator")
            .field("n", &self.n)
            .field("families", &self.families)
            .field("grid", &(self.fft.p1, self.fft.p2))
            .field("table_len", &self.table.len())
            .field("sparse_len", &self.sparse.len())
            .finish()
    }
}

impl LatticeOperator {
    pub fn new(problem: &Problem) -> Result<Self> {
        let layout = problem
            .layout
            .as_ref()
            .ok_or_else(|| Error::Unsupported("lattice operator needs a mesh with a lattice layout".into()))?;
        let n = problem.n();
        let nf = layout.num_families();
        let (min1, min2, max1, max2) = layout.bounding_box();
        let (n1, n2) = ((max1 - min1 + 1) as usize, (max2 - min2 + 1) as usize);
        let (p1, p2) = (fft_size(2 * n1 - 1), fft_size(2 * n2 - 1));
        let mut members = vec![Vec::new(); nf];
        for (i, c) in layout.coords.iter().enumerate() {
            let g = (c.a1 - min1) as usize * p2 + (c.a2 - min2) as usize;
            members[c.family as usize].push((i, g));
        }

        // Representative cell, offsets and norm per family.
        let h_r = problem.policy.h_r;
        let reps: Vec<Option<usize>> = members.iter().map(|m| m.first().map(|&(i, _)| i)).collect();
        let offsets: Vec<Option<(Vec<Vec2>, Vec<f64>)>> = reps
            .iter()
            .map(|r| r.map(|i| problem.templates().cell_offsets(problem.rule_map(i), h_r)).transpose())
            .collect::<Result<_>>()?;
        let norms: Vec<f64> = reps.iter().map(|r| r.map_or(1.0, |i| problem.norms()[i])).collect();

        // Keys present in the mesh, split into regular and singular.
        let split = &problem.split;
        let (w1, w2) = (2 * n1 - 1, 2 * n2 - 1);
        let mut regular_keys: Vec<OffsetKey> = Vec::new();
        for f in 0..nf {
            for g in 0..nf {
                let mut present = vec![false; w1 * w2];
                for &(i, _) in &members[f] {
                    let ci = layout.coords[i];
                    for &(j, _) in &members[g] {
                        let cj = layout.coords[j];
                        let d1 = (ci.a1 - cj.a1 + n1 as i64 - 1) as usize;
                        let d2 = (ci.a2 - cj.a2 + n2 as i64 - 1) as usize;
                        present[d1 * w2 + d2] = true;
                    }
                }
                for (idx, _) in present.iter().enumerate().filter(|(_, &p)| p) {
                    let key = (f as u8, g as u8, (idx / w2) as i64 - (n1 as i64 - 1), (idx % w2) as i64 - (n2 as i64 - 1));
                    regular_keys.push(key);
                }
            }
        }
        let mut singular_cache: BTreeMap<OffsetKey, Complex64> = BTreeMap::new();
        let mut sparse = Vec::with_capacity(split.num_singular());
        for (i, j) in split.singular_pairs() {
            let key = layout.key(i, j);
            let v = match singular_cache.get(&key) {
                Some(v) => *v,
                None => {
                    let v = problem.interaction(i, j)?;
                    singular_cache.insert(key, v);
                    v
                }
            };
            sparse.push((i, j, v));
        }
        regular_keys.retain(|k| !singular_cache.contains_key(k));

        // Tabulate regular keys.
        let k = problem.params.k;
        let quantum = 1e-11 * problem.mesh.h();
        let mut diffs: BTreeMap<(usize, usize), Vec<(Vec2, f64)>> = BTreeMap::new();
        for f in 0..nf {
            for g in 0..nf {
                if let (Some(a), Some(b)) = (&offsets[f], &offsets[g]) {
                    diffs.insert((f, g), merged_differences(a, b, quantum));
                }
            }
        }
        let values: Vec<Complex64> = regular_keys
            .par_iter()
            .map(|key| {
                let (f, g) = (key.0 as usize, key.1 as usize);
                let d = layout.displacement(key);
                let mut acc = Complex64::new(0.0, 0.0);
                for (delta, w) in &diffs[&(f, g)] {
                    acc += phi_r(k, (d + delta).norm()) * *w;
                }
                acc / (norms[f] * norms[g])
            })
            .collect();
        let table: BTreeMap<OffsetKey, Complex64> = regular_keys.into_iter().zip(values).collect();

        // Circulant kernels.
        let fft = Fft2::new(p1, p2);
        let mut kernels = vec![None; nf * nf];
        for (key, v) in &table {
            let slot = kernels[key.0 as usize * nf + key.1 as usize]
                .get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); p1 * p2]);
            let e1 = key.2.rem_euclid(p1 as i64) as usize;
            let e2 = key.3.rem_euclid(p2 as i64) as usize;
            slot[e1 * p2 + e2] = *v;
        }
        kernels.par_iter_mut().for_each(|kern| {
            if let Some(data) = kern {
                fft.run(data, false);
            }
        });
        Ok(LatticeOperator { n, mk2: problem.mk2(), families: nf, members, fft, kernels, table, sparse })
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    pub fn sparse_len(&self) -> usize {
        self.sparse.len()
    }

    /// `K x` (interaction part only).
    pub fn apply_interaction(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        let size = self.fft.p1 * self.fft.p2;
        let zero = Complex64::new(0.0, 0.0);
        let xhat: Vec<Option<Vec<Complex64>>> = self
            .members
            .iter()
            .map(|m| {
                if m.is_empty() {
                    return None;
                }
                let mut grid = vec![zero; size];
                for &(i, g) in m {
                    grid[g] = x[i];
                }
                self.fft.run(&mut grid, false);
                Some(grid)
            })
            .collect();
        let mut y = DVector::zeros(self.n);
        let scale = 1.0 / size as f64;
        for (f, m) in self.members.iter().enumerate() {
            if m.is_empty() {
                continue;
            }
            let mut acc = vec![zero; size];
            for (g, xg) in xhat.iter().enumerate() {
                if let (Some(kern), Some(xg)) = (&self.kernels[f * self.families + g], xg) {
                    for ((a, kv), xv) in acc.iter_mut().zip(kern).zip(xg) {
                        *a += kv * xv;
                    }
                }
            }
            self.fft.run(&mut acc, true);
            for &(i, g) in m {
                y[i] = acc[g] * scale;
            }
        }
        for &(i, j, v) in &self.sparse {
            y[i] += v * x[j];
        }
        y
    }

    /// The operator as a dense matrix, entry by entry from the tables.
    pub fn to_dense(&self, problem: &Problem) -> Result<DMatrix<Complex64>> {
        let layout = problem
            .layout
            .as_ref()
            .ok_or_else(|| Error::Unsupported("problem has no lattice layout".into()))?;
        let mut a = DMatrix::<Complex64>::identity(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if let Some(v) = self.table.get(&layout.key(i, j)) {
                    a[(i, j)] -= self.mk2 * v;
                }
            }
        }
        for &(i, j, v) in &self.sparse {
            a[(i, j)] -= self.mk2 * v;
        }
        Ok(a)
    }
}

impl LinearOperator for LatticeOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        x - self.apply_interaction(x) * self.mk2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::Example;
    use crate::kernel::WaveParams;
    use crate::mesh::example_mesh;

    #[test]
    fn fft_sizes() {
        assert_eq!(fft_size(1), 1);
        assert_eq!(fft_size(7), 8);
        assert_eq!(fft_size(13), 15);
        assert_eq!(fft_size(49), 50);
    }

    #[test]
    fn matches_dense_small() {
        let params = WaveParams::plane_wave(5.0, Complex64::new(0.5, 0.1), [0.6, 0.8]).unwrap();
        for ex in [Example::Fudgeflake, Example::koch()] {
            let p = Problem::new(example_mesh(&ex, 2).unwrap(), Some(ex), params, 2, None).unwrap();
            let op = LatticeOperator::new(&p).unwrap();
            let dense = p.assemble_dense().unwrap();
            let tab = op.to_dense(&p).unwrap();
            assert!((&tab - &dense).norm() / dense.norm() < 1e-12, "{}", ex.name());
            let x = DVector::from_fn(p.n(), |i, _| Complex64::new((i as f64).cos(), 0.3));
            let y = op.apply(&x);
            assert!((&y - &dense * &x).norm() / y.norm() < 1e-12, "{}", ex.name());
        }
    }
}
