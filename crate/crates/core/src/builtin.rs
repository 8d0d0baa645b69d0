//! The three named examples: Fudgeflake, Gosper Island and Koch Snowflake.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{rotation, Mat2, Similarity, Vec2};
use crate::ifs::IfsAttractor;

/// Diameter of the Gosper Island with unit fixed-point radius. No closed form
/// is known; value from the hull iteration in [`IfsAttractor::new`] (a
/// regression test recomputes it).
pub const GOSPER_DIAM: f64 = 2.064_120_157_237_556;

pub const KOCH_DEFAULT_H0: f64 = 1.154_700_538_379_251_5; // 2/√3

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Example {
    Fudgeflake,
    Gosper,
    Koch {
        #[serde(default = "default_h0")]
        h0: f64,
    },
}

fn default_h0() -> f64 {
    KOCH_DEFAULT_H0
}

pub(crate) fn eps(j: usize) -> Vec2 {
    match j {
        1 => Vec2::new(1.0, 0.0),
        _ => Vec2::new(0.5, 3f64.sqrt() / 2.0),
    }
}

fn gosper_angle() -> f64 {
    (3f64.sqrt() / (2.0 * 7f64.sqrt())).asin()
}

impl Example {
    pub fn koch() -> Self {
        Example::Koch { h0: KOCH_DEFAULT_H0 }
    }

    pub fn by_name(name: &str, h0: Option<f64>) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "fudgeflake" => Ok(Example::Fudgeflake),
            "gosper" => Ok(Example::Gosper),
            "koch" => {
                let h0 = h0.unwrap_or(KOCH_DEFAULT_H0);
                if !(h0 > 0.0) {
                    return Err(Error::Config("Koch h0 must be positive".into()));
                }
                Ok(Example::Koch { h0 })
            }
            other => Err(Error::Config(format!("unknown example '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Example::Fudgeflake => "fudgeflake",
            Example::Gosper => "gosper",
            Example::Koch { .. } => "koch",
        }
    }

    pub fn attractor(&self) -> IfsAttractor {
        let sqrt3 = 3f64.sqrt();
        let sqrt7 = 7f64.sqrt();
        let (maps, measure, diam, bdim) = match *self {
            Example::Fudgeflake => {
                let rho = 1.0 / sqrt3;
                let maps = (1..=3)
                    .map(|j| {
                        let shift = rotation((2 * j - 1) as f64 * PI / 3.0) * eps(1) / 3.0;
                        Similarity::new(rho, rotation(PI / 6.0), shift)
                    })
                    .collect::<Vec<_>>();
                (maps, sqrt3 / 2.0, sqrt7 / 2.0, 4f64.ln() / 3f64.ln())
            }
            Example::Gosper => {
                let th = gosper_angle();
                let rho = 1.0 / sqrt7;
                let mut maps = (1..=6)
                    .map(|j| {
                        let shift = sqrt3 / sqrt7 * (rotation((j - 1) as f64 * PI / 3.0 + th) * eps(1));
                        Similarity::new(rho, rotation(th), shift)
                    })
                    .collect::<Vec<_>>();
                maps.push(Similarity::new(rho, rotation(th), Vec2::zeros()));
                (maps, 1.5 * sqrt3, GOSPER_DIAM, 3f64.ln() / sqrt7.ln())
            }
            Example::Koch { h0 } => {
                let mut maps = (1..=6)
                    .map(|j| {
                        let shift = h0 / 3.0 * (rotation(j as f64 * PI / 3.0 - PI / 6.0) * eps(1));
                        Similarity::new(1.0 / 3.0, Mat2::identity(), shift)
                    })
                    .collect::<Vec<_>>();
                maps.push(Similarity::new(1.0 / sqrt3, rotation(PI / 6.0), Vec2::zeros()));
                (maps, 0.3 * h0 * h0 * sqrt3, h0, 4f64.ln() / 3f64.ln())
            }
        };
        IfsAttractor::new(self.name(), maps, measure, Some(diam), Some(bdim)).expect("built-in IFS is valid")
    }

    /// `h_{l+1} / h_l`.
    pub fn level_ratio(&self) -> f64 {
        match self {
            Example::Gosper => 1.0 / 7f64.sqrt(),
            _ => 1.0 / 3f64.sqrt(),
        }
    }

    pub fn h0(&self) -> f64 {
        match *self {
            Example::Fudgeflake => 7f64.sqrt() / 2.0,
            Example::Gosper => GOSPER_DIAM,
            Example::Koch { h0 } => h0,
        }
    }

    /// `h_l` for the distinct-mesh width sequence.
    pub fn level_width(&self, l: u32) -> f64 {
        self.h0() * self.level_ratio().powi(l as i32)
    }

    /// `h_0, ..., h_{l_max}`.
    pub fn mesh_level_sequence(&self, l_max: u32) -> Vec<f64> {
        (0..=l_max).map(|l| self.level_width(l)).collect()
    }

    /// Expected `#L_{h_l}`.
    pub fn element_count(&self, l: u32) -> u64 {
        match self {
            Example::Fudgeflake => 3u64.pow(l),
            Example::Gosper => 7u64.pow(l),
            Example::Koch { .. } => ((3i64.pow(l + 2) - (-2i64).pow(l + 2)) / 5) as u64,
        }
    }

    /// Maximum level accepted by configuration checks.
    pub fn level_cap(&self) -> u32 {
        match self {
            Example::Fudgeflake => 12,
            Example::Gosper => 7,
            Example::Koch { .. } => 11,
        }
    }

    /// Separation constant: disjoint cells of an `L_h` mesh have hulls at distance ≥ `C_sep·h`.
    pub fn c_sep(&self) -> f64 {
        let h0 = self.h0();
        let sqrt3 = 3f64.sqrt();
        let sqrt7 = 7f64.sqrt();
        match self {
            Example::Fudgeflake => (2.0 / sqrt3 - 1.0) / (h0 * sqrt3),
            Example::Gosper => (3.0 - (1.0 + sqrt7) / sqrt3) / (h0 * sqrt7),
            Example::Koch { .. } => 1.0 / (2.0 * h0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gosper_diam_matches_hull_iteration() {
        let g = Example::Gosper.attractor();
        assert!((g.hull().diameter() - GOSPER_DIAM).abs() < 1e-12);
        let f = Example::Fudgeflake.attractor();
        assert!((f.hull().diameter() - 7f64.sqrt() / 2.0).abs() < 1e-12);
        let k = Example::koch().attractor();
        assert!((k.hull().diameter() - KOCH_DEFAULT_H0).abs() < 1e-12);
        assert_eq!(k.hull().verts.len(), 6);
    }

    #[test]
    fn symmetry_groups() {
        assert_eq!(Example::Fudgeflake.attractor().symmetries().len(), 3);
        assert_eq!(Example::Gosper.attractor().symmetries().len(), 6);
        assert_eq!(Example::koch().attractor().symmetries().len(), 12);
    }

    #[test]
    fn koch_counts() {
        let k = Example::koch();
        let counts: Vec<u64> = (1..=4).map(|l| k.element_count(l)).collect();
        assert_eq!(counts, vec![7, 13, 55, 133]);
    }
}
