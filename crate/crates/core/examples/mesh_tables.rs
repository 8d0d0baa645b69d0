//! Element counts, measures and a few cells of the built-in example meshes.
//!
//! `cargo run --release --example mesh_tables -- [level]`

use ifs_scatter::builtin::{Example, KOCH_DEFAULT_H0};
use ifs_scatter::mesh::example_mesh;

fn main() -> ifs_scatter::error::Result<()> {
    let level: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    for ex in [Example::Fudgeflake, Example::Gosper, Example::Koch { h0: KOCH_DEFAULT_H0 }] {
        let mesh = example_mesh(&ex, level)?;
        let ifs = mesh.ifs();
        println!(
            "{:<10} level {level}: N = {:>6}  h = {:.4e}  |K| = {:.12}  (|Ω| = {:.12}, diam = {:.6})",
            ex.name(),
            mesh.len(),
            mesh.h(),
            mesh.total_measure(),
            ifs.measure(),
            ifs.diam()
        );
        for el in mesh.elements().iter().take(3) {
            println!("    {:<12} node ({:+.5}, {:+.5})  diam {:.4e}", el.word.to_string(), el.node.x, el.node.y, el.diam);
        }
    }
    Ok(())
}
