//! FFT lattice matvec against the dense matrix: agreement and timing.
//!
//! `cargo run --release --example lattice_matvec -- [level]`

use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ifs_scatter::assembly::Problem;
use ifs_scatter::builtin::Example;
use ifs_scatter::kernel::WaveParams;
use ifs_scatter::mesh::example_mesh;
use ifs_scatter::operator::LatticeOperator;
use ifs_scatter::solve::{dense_matrix, LinearOperator};

fn main() -> ifs_scatter::error::Result<()> {
    let level: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let ex = Example::koch();
    let params = WaveParams::plane_wave(5.0, Complex64::new(1.0, 0.0), [0.0, 1.0])?;
    let problem = Problem::new(example_mesh(&ex, level)?, Some(ex), params, 1, None)?;
    let t = Instant::now();
    let op = LatticeOperator::new(&problem)?;
    println!("N = {}: {} tabulated kernels, {} sparse entries, built in {:.2?}", problem.n(), op.table_len(), op.sparse_len(), t.elapsed());
    let a = dense_matrix(&problem)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = DVector::from_fn(problem.n(), |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let reps = 20;
    let t = Instant::now();
    let mut yd = DVector::zeros(problem.n());
    for _ in 0..reps {
        yd = &a * &x;
    }
    let t_dense = t.elapsed() / reps;
    let t = Instant::now();
    let mut yf = DVector::zeros(problem.n());
    for _ in 0..reps {
        yf = op.apply(&x);
    }
    let t_fft = t.elapsed() / reps;
    println!("relative difference {:.2e}", (&yf - &yd).norm() / yd.norm());
    println!("dense {t_dense:.2?}, lattice {t_fft:.2?}, speedup {:.1}x", t_dense.as_secs_f64() / t_fft.as_secs_f64());
    Ok(())
}
