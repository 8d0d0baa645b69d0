//! Level ladder against a reference solution, printed as a table.
//!
//! `cargo run --release --example convergence_ladder -- [fudgeflake|koch] [alpha]`

use ifs_scatter::config::ScatterConfig;
use ifs_scatter::harness::convergence_study;

fn main() -> ifs_scatter::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ScatterConfig::default();
    cfg.geometry.name = args.next().unwrap_or_else(|| "fudgeflake".into());
    cfg.alpha = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    cfg.levels = vec![2, 3, 4, 5];
    cfg.reference_level = Some(7);
    cfg.validate(None)?;
    let study = convergence_study(&cfg, cfg.k)?;
    println!("{} α={} reference level {} (N = {})", cfg.geometry.name, cfg.alpha, study.reference_level, study.reference_n);
    println!("{:>5} {:>7} {:>12} {:>12} {:>12}", "level", "N", "L2", "far field", "scattered");
    for r in &study.rows {
        println!("{:>5} {:>7} {:>12.4e} {:>12.4e} {:>12.4e}", r.level, r.n, r.l2_error, r.farfield_error, r.scattered_error);
    }
    let f = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
    println!("EOC (last 3): L2 {}  far field {}  scattered {}", f(study.fit_l2), f(study.fit_farfield), f(study.fit_scattered));
    Ok(())
}
