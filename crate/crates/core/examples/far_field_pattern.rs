//! Far-field pattern of the Gosper island at two wavenumbers.
//!
//! `cargo run --release --example far_field_pattern`

use num_complex::Complex64;

use ifs_scatter::assembly::Problem;
use ifs_scatter::builtin::Example;
use ifs_scatter::kernel::WaveParams;
use ifs_scatter::mesh::example_mesh;
use ifs_scatter::postprocess::{angles, far_field_pattern};
use ifs_scatter::solve::{solve_problem, SolverOptions};

fn main() -> ifs_scatter::error::Result<()> {
    let ex = Example::Gosper;
    let thetas = angles(12);
    for k in [5.0, 15.0] {
        let params = WaveParams::plane_wave(k, Complex64::new(1.0, 0.0), [1.0, 0.0])?;
        let problem = Problem::new(example_mesh(&ex, 3)?, Some(ex), params, 2, None)?;
        let report = solve_problem(&problem, &SolverOptions::default())?;
        let ff = far_field_pattern(&problem, &report.coefficients, &thetas)?;
        println!("k = {k}:");
        for (t, u) in thetas.iter().zip(&ff) {
            println!("    θ = {:6.1}°  |u∞| = {:.6e}", t.to_degrees(), u.norm());
        }
    }
    Ok(())
}
