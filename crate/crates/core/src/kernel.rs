//! Helmholtz fundamental solution `Φ(x,y) = (i/4) H₀⁽¹⁾(k|x-y|)`, its
//! splitting `Φ = c₂ Φ₀ + Φ*` with `Φ₀ = log|x-y|`, and incident fields.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::{h0_unchecked, series0, EULER_GAMMA};
use crate::error::{Error, Result};
use crate::geom::Vec2;

/// `c₂ = -1/(2π)`.
pub const C2: f64 = -1.0 / (2.0 * std::f64::consts::PI);

const DIAGONAL_BRANCH: f64 = 1e-8;
const I4: Complex64 = Complex64::new(0.0, 0.25);

/// `Φ` as a function of distance `r > 0`.
#[inline]
pub fn phi_r(k: f64, r: f64) -> Complex64 {
    I4 * h0_unchecked(k * r)
}

/// `Φ*(r) = Φ(r) - c₂ log r`, finite at `r = 0`.
#[inline]
pub fn phi_star_r(k: f64, r: f64) -> Complex64 {
    let z = k * r;
    let inv2pi = 1.0 / (2.0 * std::f64::consts::PI);
    if z < DIAGONAL_BRANCH {
        phi_star_diagonal(k)
    } else if z <= 8.0 {
        let (j0, j0m1, s) = series0(z);
        let re = -inv2pi * (((0.5 * k).ln() + EULER_GAMMA) * j0 + r.ln() * j0m1 + s);
        Complex64::new(re, 0.25 * j0)
    } else {
        I4 * h0_unchecked(z) + inv2pi * r.ln()
    }
}

/// `Φ*(x,x) = i/4 - (log(k/2) + γ)/(2π)`.
pub fn phi_star_diagonal(k: f64) -> Complex64 {
    Complex64::new(-((0.5 * k).ln() + EULER_GAMMA) / (2.0 * std::f64::consts::PI), 0.25)
}

fn distinct(x: &Vec2, y: &Vec2) -> Result<f64> {
    let r = (x - y).norm();
    if r > 0.0 {
        Ok(r)
    } else {
        Err(Error::Input("kernel evaluated at coincident points".into()))
    }
}

pub fn phi(k: f64, x: &Vec2, y: &Vec2) -> Result<Complex64> {
    Ok(phi_r(k, distinct(x, y)?))
}

pub fn phi0(x: &Vec2, y: &Vec2) -> Result<f64> {
    Ok(distinct(x, y)?.ln())
}

pub fn phi_star(k: f64, x: &Vec2, y: &Vec2) -> Complex64 {
    phi_star_r(k, (x - y).norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Incident {
    /// `exp(i k ϑ·x)`.
    PlaneWave { direction: [f64; 2] },
    /// `Φ(x, x₀)`.
    PointSource { x0: [f64; 2] },
    /// `u ≡ 1`, the `k → 0` limit of a plane wave; used in tests.
    Constant,
}

/// Wavenumber, contrast and incident field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub k: f64,
    /// Contrast `m` in `𝔪 = m χ_Ω`, i.e. refractive index `1 + m`.
    pub m: Complex64,
    pub incident: Incident,
}

impl WaveParams {
    pub fn new(k: f64, m: Complex64, incident: Incident) -> Result<Self> {
        let p = Self { k, m, incident };
        p.validate()?;
        Ok(p)
    }

    pub fn plane_wave(k: f64, m: Complex64, direction: [f64; 2]) -> Result<Self> {
        Self::new(k, m, Incident::PlaneWave { direction })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Config(format!("wavenumber must be positive, got {}", self.k)));
        }
        if self.m.im < 0.0 {
            return Err(Error::Config("contrast must satisfy Im(m) >= 0".into()));
        }
        if let Incident::PlaneWave { direction } = self.incident {
            let n = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("plane-wave direction must be a unit vector (|ϑ| = {n})")));
            }
        }
        Ok(())
    }

    pub fn incident_field(&self, x: &Vec2) -> Result<Complex64> {
        match self.incident {
            Incident::PlaneWave { direction } => {
                Ok(Complex64::from_polar(1.0, self.k * (direction[0] * x.x + direction[1] * x.y)))
            }
            Incident::PointSource { x0 } => phi(self.k, x, &Vec2::new(x0[0], x0[1])),
            Incident::Constant => Ok(Complex64::new(1.0, 0.0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decomposition_near_diagonal() {
        let d = phi_star_diagonal(1.0);
        let near = phi_star_r(1.0, 1e-10);
        assert!((d - near).norm() < 1e-12);
        let r: f64 = 0.37;
        let lhs = phi_r(2.0, r);
        let rhs = C2 * r.ln() + phi_star_r(2.0, r);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn plane_wave_phase() {
        let p = WaveParams::plane_wave(5.0, Complex64::new(1.0, 0.0), [0.0, 1.0]).unwrap();
        let u = p.incident_field(&Vec2::new(0.0, std::f64::consts::PI / 5.0)).unwrap();
        assert!((u + 1.0).norm() < 1e-14);
    }

    #[test]
    fn validation() {
        assert!(WaveParams::plane_wave(5.0, Complex64::new(1.0, -0.1), [0.0, 1.0]).is_err());
        assert!(WaveParams::plane_wave(5.0, Complex64::new(1.0, 0.0), [0.0, 2.0]).is_err());
        let p = WaveParams::new(1.0, Complex64::new(1.0, 0.0), Incident::PointSource { x0: [0.0, 0.0] }).unwrap();
        assert!(p.incident_field(&Vec2::zeros()).is_err());
    }
}
