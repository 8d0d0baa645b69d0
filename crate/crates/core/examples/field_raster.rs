//! Total field on a raster around the Koch snowflake, written as CSV.
//!
//! `cargo run --release --example field_raster -- [out.csv]`

use num_complex::Complex64;

use ifs_scatter::assembly::Problem;
use ifs_scatter::builtin::Example;
use ifs_scatter::geom::Vec2;
use ifs_scatter::harness::{field_csv, mirror_defect};
use ifs_scatter::kernel::WaveParams;
use ifs_scatter::mesh::example_mesh;
use ifs_scatter::postprocess::{field_grid, RasterSpec};
use ifs_scatter::solve::{solve_problem, SolverOptions};

fn main() -> ifs_scatter::error::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "field_koch.csv".into());
    let ex = Example::koch();
    let params = WaveParams::plane_wave(15.0, Complex64::new(1.0, 0.0), [0.0, 1.0])?;
    let problem = Problem::new(example_mesh(&ex, 5)?, Some(ex), params, 1, None)?;
    let report = solve_problem(&problem, &SolverOptions::default())?;
    let spec = RasterSpec::square(Vec2::zeros(), 0.75 * ex.h0(), 48);
    let grid = field_grid(&problem, &report.coefficients, &spec)?;
    field_csv(&grid).write(std::path::Path::new(&out))?;
    let inside = grid.inside.iter().filter(|b| **b).count();
    println!("{out}: {} pixels ({inside} inside K), {} missing, mirror defect {:.1e}", grid.values.len(), grid.missing(), mirror_defect(&grid).unwrap_or(f64::NAN));
    Ok(())
}
