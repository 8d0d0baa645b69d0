//! Singular log-kernel integrals from the canonical linear system, checked
//! against graded refinement.
//!
//! `cargo run --release --example canonical_integrals`

use std::sync::Arc;

use ifs_scatter::builtin::{Example, KOCH_DEFAULT_H0};
use ifs_scatter::geom::Similarity;
use ifs_scatter::singular::{graded_log_integral, CanonicalSystem, ClosureOptions};

/// Graded depth with about 2^-6 resolution; pairs of cells recurse together.
fn depth(ex: Example) -> usize {
    match ex {
        Example::Gosper => 4,
        _ => 6,
    }
}

fn main() -> ifs_scatter::error::Result<()> {
    for ex in [Example::Fudgeflake, Example::Gosper, Example::Koch { h0: KOCH_DEFAULT_H0 }] {
        let ifs = Arc::new(ex.attractor());
        let sys = CanonicalSystem::derive(&ifs, ClosureOptions::default())?;
        println!("{}: n_s = {}, n_r = {}, cond(A) = {:.3}", ex.name(), sys.n_s(), sys.n_r(), sys.condition_number());
        let h_s = ifs.diam() / 16.0;
        let values = sys.solve(h_s)?;
        for (class, v) in sys.classes().iter().zip(values.iter()) {
            println!("    {:<28} {:?}  I = {v:+.10}", class.label, class.kind);
        }
        let id = Similarity::identity();
        let graded = graded_log_integral(&ifs, &id, &id, depth(ex), 0.05)?;
        println!("    self-integral: canonical {:+.8}  graded (depth {}) {:+.8}", values[0], depth(ex), graded);
    }
    Ok(())
}
