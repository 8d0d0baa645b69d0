//! Linear solvers for the Galerkin system: dense LU and restarted GMRES.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assembly::Problem;
use crate::error::{Error, Result};
use crate::operator::LatticeOperator;

/// A square operator `x ↦ A x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<Complex64>) -> DVector<Complex64>;
}

impl LinearOperator for DMatrix<Complex64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        self * x
    }
}

/// `A^H x` for complex-symmetric `A` (`A^T = A`), as `conj(A conj(x))`.
pub fn apply_adjoint_symmetric(op: &dyn LinearOperator, x: &DVector<Complex64>) -> DVector<Complex64> {
    op.apply(&x.map(|v| v.conj())).map(|v| v.conj())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GmresOptions {
    pub restart: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { restart: 50, tol: 1e-10, max_iter: 5000 }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: DVector<Complex64>,
    pub iterations: usize,
    /// Relative residual `‖b - Ax‖ / ‖b‖` (true, recomputed at the end).
    pub residual: f64,
    /// Estimated relative residual after each inner iteration.
    pub history: Vec<f64>,
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    // Rotation [c s; -conj(s) c] with c real, mapping (a, b) to (r, 0).
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, (b / nb).conj());
    }
    let t = (na * na + nb * nb).sqrt();
    let c = na / t;
    let s = (a / na) * b.conj() / t;
    (c, s)
}

/// Restarted GMRES(m) with modified Gram-Schmidt and Givens rotations.
/// Fails with [`Error::Convergence`] when `max_iter` is reached.
pub fn gmres(
    op: &dyn LinearOperator,
    b: &DVector<Complex64>,
    x0: Option<&DVector<Complex64>>,
    opts: &GmresOptions,
) -> Result<GmresOutcome> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::Input(format!("right-hand side has length {} but operator has size {n}", b.len())));
    }
    let zero = Complex64::new(0.0, 0.0);
    let bnorm = b.norm();
    let mut x = x0.cloned().unwrap_or_else(|| DVector::zeros(n));
    if bnorm == 0.0 {
        return Ok(GmresOutcome { x: DVector::zeros(n), iterations: 0, residual: 0.0, history: vec![] });
    }
    let m = opts.restart.max(1).min(n.max(1));
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let r = b - op.apply(&x);
        let beta = r.norm();
        if beta / bnorm <= opts.tol {
            return Ok(GmresOutcome { x, iterations, residual: beta / bnorm, history });
        }
        if iterations >= opts.max_iter {
            return Err(Error::Convergence { iterations, residual: beta / bnorm, history });
        }
        let mut v: Vec<DVector<Complex64>> = vec![r / Complex64::new(beta, 0.0)];
        let mut hcols: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<(f64, Complex64)> = Vec::new();
        let mut g = vec![zero; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k = 0;
        while k < m && iterations < opts.max_iter {
            let mut w = op.apply(&v[k]);
            let mut h = vec![zero; k + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = vi.dotc(&w);
                w -= vi * hij;
                h[i] = hij;
            }
            let wn = w.norm();
            h[k + 1] = Complex64::new(wn, 0.0);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, bb) = (h[i], h[i + 1]);
                h[i] = a * c + s * bb;
                h[i + 1] = -s.conj() * a + bb * c;
            }
            let (c, s) = givens(h[k], h[k + 1]);
            h[k] = h[k] * c + s * h[k + 1];
            h[k + 1] = zero;
            g[k + 1] = -s.conj() * g[k];
            g[k] *= c;
            cs.push((c, s));
            hcols.push(h);
            iterations += 1;
            k += 1;
            let est = g[k].norm() / bnorm;
            history.push(est);
            if est <= opts.tol || wn == 0.0 {
                break;
            }
            v.push(w / Complex64::new(wn, 0.0));
        }
        // Back substitution for the k×k triangular system.
        let mut y = vec![zero; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (j, yj) in y.iter().enumerate().skip(i + 1) {
                s -= hcols[j][i] * yj;
            }
            y[i] = s / hcols[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x += &v[j] * *yj;
        }
    }
}

/// Dense LU solve.
pub fn solve_lu(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numeric("Galerkin matrix is singular to working precision".into()))
}

/// `κ₂ = σ_max / σ_min` from a full SVD.
pub fn condition_number_dense(a: &DMatrix<Complex64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// `κ₂` estimate for a complex-symmetric operator: power iteration on `A^H A`
/// for `σ_max` and inverse iteration with GMRES solves for `σ_min`.
pub fn condition_estimate(op: &dyn LinearOperator, iters: usize) -> Result<f64> {
    let n = op.dim();
    let start = DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64 * 0.618).fract(), 0.0));
    let normalise = |v: DVector<Complex64>| {
        let nv = v.norm();
        v / Complex64::new(nv, 0.0)
    };
    let mut v = normalise(start.clone());
    let mut smax = 0.0;
    for _ in 0..iters {
        let w = apply_adjoint_symmetric(op, &op.apply(&v));
        smax = w.norm().sqrt();
        v = normalise(w);
    }
    let opts = GmresOptions { tol: 1e-8, ..GmresOptions::default() };
    let mut v = normalise(start);
    let mut inv = 0.0;
    for _ in 0..iters {
        // (A^H A)^{-1} v = A^{-1} A^{-H} v, with A^{-H} u = conj(A^{-1} conj(u)).
        let u = gmres(op, &v.map(|c| c.conj()), None, &opts)?.x.map(|c| c.conj());
        let w = gmres(op, &u, None, &opts)?.x;
        inv = w.norm().sqrt();
        v = normalise(w);
    }
    Ok(smax * inv)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Auto,
    Lu,
    GmresDense,
    GmresLattice,
}

/// Thresholds for automatic solver selection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub kind: SolverKind,
    pub gmres: GmresOptions,
    pub lu_max: usize,
    pub dense_max: usize,
    pub estimate_condition: bool,
    /// Largest size for which `κ₂` is computed by SVD.
    pub svd_max: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            kind: SolverKind::Auto,
            gmres: GmresOptions::default(),
            lu_max: 1500,
            dense_max: 8000,
            estimate_condition: false,
            svd_max: 1500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub coefficients: DVector<Complex64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub cond_estimate: Option<f64>,
    pub method: SolverKind,
    /// GMRES residual estimates per iteration (empty for LU).
    pub history: Vec<f64>,
}

/// The solver actually used for a problem of this size and shape.
pub fn select_solver(problem: &Problem, opts: &SolverOptions) -> Result<SolverKind> {
    let n = problem.n();
    Ok(match opts.kind {
        SolverKind::Auto if n <= opts.lu_max => SolverKind::Lu,
        SolverKind::Auto if problem.layout.is_some() => SolverKind::GmresLattice,
        SolverKind::Auto if n <= opts.dense_max => SolverKind::GmresDense,
        SolverKind::Auto => {
            return Err(Error::Resource(format!(
                "N = {n} exceeds the dense limit {} and the mesh has no lattice layout",
                opts.dense_max
            )))
        }
        SolverKind::GmresLattice if problem.layout.is_none() => {
            return Err(Error::Unsupported("lattice operator needs a mesh with a lattice layout".into()))
        }
        k => k,
    })
}

/// Dense `Ã`, from the lattice tables when the mesh has a layout.
pub fn dense_matrix(problem: &Problem) -> Result<DMatrix<Complex64>> {
    match problem.layout {
        Some(_) => LatticeOperator::new(problem)?.to_dense(problem),
        None => problem.assemble_dense(),
    }
}

/// Assemble and solve `Ã c = g̃`.
pub fn solve_problem(problem: &Problem, opts: &SolverOptions) -> Result<SolveReport> {
    let method = select_solver(problem, opts)?;
    let rhs = problem.assemble_rhs()?;
    let residual = |op: &dyn LinearOperator, x: &DVector<Complex64>| (&rhs - op.apply(x)).norm() / rhs.norm().max(f64::MIN_POSITIVE);
    match method {
        SolverKind::Lu => {
            let a = dense_matrix(problem)?;
            let x = solve_lu(&a, &rhs)?;
            let cond = (opts.estimate_condition && problem.n() <= opts.svd_max).then(|| condition_number_dense(&a));
            let cond = match (opts.estimate_condition, cond) {
                (true, None) => Some(condition_estimate(&a, 30)?),
                (_, c) => c,
            };
            Ok(SolveReport { residual_norm: residual(&a, &x), coefficients: x, iterations: 0, cond_estimate: cond, method, history: vec![] })
        }
        SolverKind::GmresDense => {
            let a = dense_matrix(problem)?;
            let out = gmres(&a, &rhs, None, &opts.gmres)?;
            let cond = if opts.estimate_condition { Some(condition_estimate(&a, 30)?) } else { None };
            Ok(SolveReport { residual_norm: residual(&a, &out.x), coefficients: out.x, iterations: out.iterations, cond_estimate: cond, method, history: out.history })
        }
        SolverKind::GmresLattice => {
            let op = LatticeOperator::new(problem)?;
            let out = gmres(&op, &rhs, None, &opts.gmres)?;
            let cond = if opts.estimate_condition { Some(condition_estimate(&op, 30)?) } else { None };
            Ok(SolveReport { residual_norm: residual(&op, &out.x), coefficients: out.x, iterations: out.iterations, cond_estimate: cond, method, history: out.history })
        }
        SolverKind::Auto => unreachable!("resolved by select_solver"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { 3.0 } else { 0.0 };
            let t = ((i * 7 + j * 3) % 11) as f64 / 11.0;
            Complex64::new(d + 0.3 * t, 0.2 * ((i + j) as f64).sin())
        })
    }

    #[test]
    fn gmres_matches_lu() {
        let a = test_matrix(40);
        let b = DVector::from_fn(40, |i, _| Complex64::new(i as f64, 1.0));
        let x = solve_lu(&a, &b).unwrap();
        for restart in [5, 50] {
            let opts = GmresOptions { restart, ..Default::default() };
            let out = gmres(&a, &b, None, &opts).unwrap();
            assert!((&out.x - &x).norm() / x.norm() < 1e-9, "restart {restart}");
            assert!(out.residual <= 1e-10);
        }
    }

    #[test]
    fn gmres_reports_nonconvergence() {
        let a = test_matrix(30);
        let b = DVector::from_element(30, Complex64::new(1.0, 0.0));
        let opts = GmresOptions { restart: 2, tol: 1e-14, max_iter: 3 };
        assert!(matches!(gmres(&a, &b, None, &opts), Err(Error::Convergence { .. })));
    }

    #[test]
    fn condition_estimate_matches_svd() {
        let mut a = test_matrix(25);
        a = &a + a.transpose();
        let exact = condition_number_dense(&a);
        let est = condition_estimate(&a, 200).unwrap();
        assert!((est - exact).abs() / exact < 1e-3, "{est} vs {exact}");
    }
}
