//! Fields, far-field patterns and error measures from a Galerkin solution.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::Problem;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::kernel::{phi_r, phi_star_diagonal, C2};
use crate::mesh::{nested_restriction, LhMesh};
use crate::singular::barycentre_log_integral;

fn dot(j: &DVector<Complex64>, c: &DVector<Complex64>) -> Complex64 {
    j.iter().zip(c.iter()).map(|(a, b)| a * b).sum()
}

/// `u^s(x₀) ≈ Σ j̃_i(x₀) c_i`. A quadrature node at `x₀` triggers one retry with
/// half the width before failing with [`Error::Collision`].
pub fn scattered_field(problem: &Problem, coeffs: &DVector<Complex64>, x0: &Vec2) -> Result<Complex64> {
    let h_j = problem.policy.h_j;
    match problem.scattered_vector(x0, h_j) {
        Ok(j) => Ok(dot(&j, coeffs)),
        Err(Error::Collision(_)) => Ok(dot(&problem.scattered_vector(x0, 0.5 * h_j)?, coeffs)),
        Err(e) => Err(e),
    }
}

/// Scattered field at `n` equispaced points on a circle.
pub fn scattered_on_circle(
    problem: &Problem,
    coeffs: &DVector<Complex64>,
    centre: &Vec2,
    radius: f64,
    n: usize,
) -> Result<Vec<Complex64>> {
    (0..n)
        .into_par_iter()
        .map(|m| {
            let t = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
            scattered_field(problem, coeffs, &(centre + Vec2::new(t.cos(), t.sin()) * radius))
        })
        .collect()
}

/// `u^∞(θ) ≈ Σ j̃_i(θ) c_i`.
pub fn far_field(problem: &Problem, coeffs: &DVector<Complex64>, theta: f64) -> Result<Complex64> {
    Ok(dot(&problem.far_field_vector(theta, problem.policy.h_j)?, coeffs))
}

/// Far field at the given angles.
pub fn far_field_pattern(problem: &Problem, coeffs: &DVector<Complex64>, thetas: &[f64]) -> Result<Vec<Complex64>> {
    thetas.par_iter().map(|&t| far_field(problem, coeffs, t)).collect()
}

/// `n` equispaced angles in `[0, 2π)`.
pub fn angles(n: usize) -> Vec<f64> {
    (0..n).map(|m| 2.0 * std::f64::consts::PI * m as f64 / n as f64).collect()
}

/// Total-field evaluation anywhere, inside `K` included, by the iterated Galerkin
/// formula `u(x) = u^i(x) + k² m ∫_K Φ(x, y) u_h(y) dy`.
///
/// Each cell is integrated with `Q^{h_J}`; a sub-cell whose node coincides with
/// `x` is integrated exactly in its logarithmic part.
#[derive(Debug, Clone)]
pub struct FieldEvaluator<'a> {
    problem: &'a Problem,
    coeffs: &'a DVector<Complex64>,
    h_j: f64,
    /// `∫_Ω log|x_Ω - y| dy`.
    p: f64,
}

impl<'a> FieldEvaluator<'a> {
    /// `h_j` defaults to one level below the mesh width.
    pub fn new(problem: &'a Problem, coeffs: &'a DVector<Complex64>, h_j: Option<f64>) -> Result<Self> {
        let ifs = problem.mesh.ifs();
        let h_j = match (h_j, problem.example, problem.mesh.level()) {
            (Some(h), _, _) => h,
            (None, Some(ex), Some(l)) => ex.level_width(l + 1),
            _ => problem.mesh.h() * ifs.rho_max(),
        };
        let p = barycentre_log_integral(ifs, 0.02 * ifs.diam())?;
        Ok(FieldEvaluator { problem, coeffs, h_j, p })
    }

    pub fn h_j(&self) -> f64 {
        self.h_j
    }

    /// `k² m ∫_K Φ(x, y) u_h(y) dy`.
    pub fn scattered(&self, x: &Vec2) -> Result<Complex64> {
        let pr = self.problem;
        let ifs = pr.mesh.ifs();
        let k = pr.params.k;
        let tol = 1e-12 * pr.mesh.h();
        let centre = ifs.barycentre();
        let (omega, radius) = (ifs.measure(), ifs.radius());
        let phi_d = phi_star_diagonal(k);
        let mut total = Complex64::new(0.0, 0.0);
        for (i, e) in pr.mesh.elements().iter().enumerate() {
            let ci = self.coeffs[i];
            if ci == Complex64::new(0.0, 0.0) {
                continue;
            }
            let map = pr.rule_map(i);
            // Far cells first: a cheap bound skips nothing, only collisions need care.
            let near = (x - e.node).norm() <= map.rho * radius * (1.0 + 1e-9);
            let mut acc = Complex64::new(0.0, 0.0);
            if near {
                crate::mesh::for_each_leaf(ifs, map, self.h_j, |_, s| {
                    let y = s.apply(&centre);
                    let w = s.rho * s.rho * omega;
                    let r = (x - y).norm();
                    if r <= tol {
                        acc += C2 * s.rho * s.rho * (self.p + omega * s.rho.ln()) + phi_d * w;
                    } else {
                        acc += phi_r(k, r) * w;
                    }
                })?;
            } else {
                let q = pr.cell_rule(i, self.h_j)?;
                for (y, &w) in q.nodes.iter().zip(&q.weights) {
                    acc += phi_r(k, (x - y).norm()) * w;
                }
            }
            total += acc * ci / pr.norms()[i];
        }
        Ok(total * pr.mk2())
    }

    pub fn total(&self, x: &Vec2) -> Result<Complex64> {
        Ok(self.problem.params.incident_field(x)? + self.scattered(x)?)
    }
}

/// Iterated Galerkin total field at one point.
pub fn iterated_galerkin(problem: &Problem, coeffs: &DVector<Complex64>, x: &Vec2) -> Result<Complex64> {
    FieldEvaluator::new(problem, coeffs, None)?.total(x)
}

/// Pixel-centred raster over `[x_min, x_max] × [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterSpec {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl RasterSpec {
    /// Square raster of side `2 half_width` centred at `c`.
    pub fn square(c: Vec2, half_width: f64, n: usize) -> Self {
        RasterSpec { nx: n, ny: n, x_min: c.x - half_width, x_max: c.x + half_width, y_min: c.y - half_width, y_max: c.y + half_width }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(Error::Config("raster needs nx, ny >= 1 and a non-empty box".into()));
        }
        Ok(())
    }

    /// Centre of pixel `(ix, iy)`.
    pub fn point(&self, ix: usize, iy: usize) -> Vec2 {
        let dx = (self.x_max - self.x_min) / self.nx as f64;
        let dy = (self.y_max - self.y_min) / self.ny as f64;
        Vec2::new(self.x_min + (ix as f64 + 0.5) * dx, self.y_min + (iy as f64 + 0.5) * dy)
    }
}

/// Total field on a raster, row-major in `y` then `x`; `None` where evaluation failed.
#[derive(Clone, Debug)]
pub struct FieldGrid {
    pub spec: RasterSpec,
    pub values: Vec<Option<Complex64>>,
    /// Whether each pixel centre lies in a mesh cell's hull.
    pub inside: Vec<bool>,
}

impl FieldGrid {
    pub fn missing(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

pub fn field_grid(problem: &Problem, coeffs: &DVector<Complex64>, spec: &RasterSpec) -> Result<FieldGrid> {
    spec.validate()?;
    let ev = FieldEvaluator::new(problem, coeffs, None)?;
    let pts: Vec<Vec2> = (0..spec.ny).flat_map(|iy| (0..spec.nx).map(move |ix| (ix, iy))).map(|(ix, iy)| spec.point(ix, iy)).collect();
    let values = pts.par_iter().map(|x| ev.total(x).ok()).collect();
    let inside = pts.iter().map(|x| problem.mesh.locate(x).is_some()).collect();
    Ok(FieldGrid { spec: *spec, values, inside })
}

/// `‖u_c - u_f‖_{L²(K)}` for nested meshes, from physical cell values `c_i / |Ω_i|^{1/2}`.
pub fn l2_error_nested(
    coarse: &LhMesh,
    coarse_coeffs: &DVector<Complex64>,
    fine: &LhMesh,
    fine_coeffs: &DVector<Complex64>,
) -> Result<f64> {
    if coarse_coeffs.len() != coarse.len() || fine_coeffs.len() != fine.len() {
        return Err(Error::Input("coefficient vectors do not match their meshes".into()));
    }
    let parent = nested_restriction(coarse, fine)?;
    let (nc, nf) = (coarse.norms(), fine.norms());
    let mut acc = 0.0;
    for (j, &i) in parent.iter().enumerate() {
        let vc = coarse_coeffs[i] / nc[i];
        let vf = fine_coeffs[j] / nf[j];
        acc += (vc - vf).norm_sqr() * fine.elements()[j].measure;
    }
    Ok(acc.sqrt())
}

/// `‖u_h‖_{L²(K)}`, which equals the Euclidean norm of the coefficients.
pub fn l2_norm(coeffs: &DVector<Complex64>) -> f64 {
    coeffs.norm()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Input("slope fit needs at least two paired values".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Numeric("slope fit needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// Experimental order of convergence in `h`, fitted over the last three points.
pub fn eoc(h: &[f64], err: &[f64]) -> Result<f64> {
    let s = h.len().saturating_sub(3);
    log_slope(&h[s..], &err[s.min(err.len())..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let h = [0.5, 0.25, 0.125, 0.0625];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        assert!((eoc(&h, &e).unwrap() - 1.7).abs() < 1e-12);
        assert!(log_slope(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn raster_is_pixel_centred() {
        let r = RasterSpec { nx: 4, ny: 2, x_min: 0.0, x_max: 4.0, y_min: -1.0, y_max: 1.0 };
        assert_eq!(r.point(0, 0), Vec2::new(0.5, -0.5));
        assert_eq!(r.point(3, 1), Vec2::new(3.5, 0.5));
    }
}
