//! Galerkin volume integral equation solver for acoustic scattering by
//! IFS-attractor fractals, with piecewise-constant elements on self-similar meshes.

// `!(x > 0.0)` is used on purpose to reject NaN; reference constants keep full digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod builtin;
pub mod error;
pub mod geom;
pub mod ifs;
pub mod bessel;
pub mod kernel;
pub mod lattice;
pub mod mesh;
pub mod classify;
pub mod quadrature;
pub mod singular;
pub mod assembly;
pub mod operator;
pub mod solve;
pub mod postprocess;
pub mod prefractal;
pub mod io;
pub mod config;
pub mod harness;
