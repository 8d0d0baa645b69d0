//! Solve for the total field on a Koch snowflake and print solver diagnostics.
//!
//! `cargo run --release --example scatter_plane_wave -- [level] [k]`

use num_complex::Complex64;

use ifs_scatter::assembly::Problem;
use ifs_scatter::builtin::Example;
use ifs_scatter::kernel::WaveParams;
use ifs_scatter::mesh::example_mesh;
use ifs_scatter::solve::{solve_problem, SolverOptions};

fn main() -> ifs_scatter::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let level: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let k: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5.0);
    let ex = Example::koch();
    let params = WaveParams::plane_wave(k, Complex64::new(1.0, 0.0), [0.0, 1.0])?;
    let problem = Problem::new(example_mesh(&ex, level)?, Some(ex), params, 1, None)?;
    let opts = SolverOptions { estimate_condition: true, ..SolverOptions::default() };
    let report = solve_problem(&problem, &opts)?;
    println!("N = {}, method {:?}, residual {:.2e}, iterations {}", problem.n(), report.method, report.residual_norm, report.iterations);
    if let Some(c) = report.cond_estimate {
        println!("cond_2 ≈ {c:.4}");
    }
    // Cell averages of u on the first few cells.
    let norms = problem.norms();
    for (i, (c, n)) in report.coefficients.iter().zip(norms.iter()).take(5).enumerate() {
        let u = c / n;
        println!("    cell {i}: u = {:+.6} {:+.6}i", u.re, u.im);
    }
    Ok(())
}
