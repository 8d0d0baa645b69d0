//! Koch snowflake: conforming IFS meshes against triangle prefractals.
//!
//! `cargo run --release --example prefractal_comparison`

use ifs_scatter::config::ScatterConfig;
use ifs_scatter::harness::compare_prefractal;
use ifs_scatter::prefractal::build_prefractal_mesh;

fn main() -> ifs_scatter::error::Result<()> {
    let mut cfg = ScatterConfig::default();
    cfg.geometry.name = "koch".into();
    cfg.alpha = 2;
    cfg.levels = vec![2, 3, 4, 5];
    cfg.reference_level = Some(7);
    cfg.prefractal_levels = vec![1, 2, 3];
    cfg.validate(None)?;
    for j in 0..=3 {
        let pm = build_prefractal_mesh(j, cfg.h0()?)?;
        println!("prefractal j = {j}: {} triangles, area {:.6}", pm.len(), pm.area());
    }
    let c = compare_prefractal(&cfg, cfg.k)?;
    for r in &c.rows {
        println!("{:<11} level {} N = {:>6}  error {:.4e}", r.method, r.level, r.n, r.error);
    }
    println!("slopes in N: conforming {:?}, prefractal {:?}", c.conforming_slope, c.prefractal_slope);
    Ok(())
}
