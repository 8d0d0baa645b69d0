//! Experiment runners behind the CLI subcommands.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::assembly::Problem;
use crate::builtin::Example;
use crate::config::ScatterConfig;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::ifs::{unit_square, IfsAttractor, IfsFile};
use crate::io::{fmt_f64, write_complex_matrix_bin, write_complex_vector_bin, write_sidecar, Csv};
use crate::mesh::{build_lh_mesh, example_mesh, LhMesh};
use crate::postprocess::{
    angles, far_field_pattern, field_grid, l2_error_nested, log_slope, scattered_on_circle, FieldGrid, RasterSpec,
};
use crate::prefractal::build_prefractal_mesh;
use crate::singular::{CanonicalSystem, ClosureOptions};
use crate::solve::{dense_matrix, solve_problem, SolveReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Mesh,
    Solve,
    Field,
    Farfield,
    Converge,
    ComparePrefractal,
    CanonicalDump,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Solve => "solve",
            Command::Field => "field",
            Command::Farfield => "farfield",
            Command::Converge => "converge",
            Command::ComparePrefractal => "compare-prefractal",
            Command::CanonicalDump => "canonical-dump",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Geometry {
    Example(Example),
    Prefractal { h0: f64 },
    Custom(Arc<IfsAttractor>),
}

pub fn load_ifs_file(cfg: &ScatterConfig) -> Result<IfsAttractor> {
    let path = cfg
        .geometry
        .path
        .as_ref()
        .ok_or_else(|| Error::Config("geometry 'file' needs geometry.path".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read IFS file {path}: {e}")))?;
    let file: IfsFile =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("IFS file {path} is invalid: {e}")))?;
    file.into_attractor()
}

pub fn geometry(cfg: &ScatterConfig) -> Result<Geometry> {
    if let Some(ex) = cfg.example()? {
        return Ok(Geometry::Example(ex));
    }
    match cfg.geometry.name.as_str() {
        "koch-prefractal" => Ok(Geometry::Prefractal { h0: cfg.h0()? }),
        "unit-square" => Ok(Geometry::Custom(Arc::new(unit_square()))),
        "file" => Ok(Geometry::Custom(Arc::new(load_ifs_file(cfg)?))),
        other => Err(Error::Config(format!("unknown geometry '{other}'"))),
    }
}

fn require_level(cfg: &ScatterConfig) -> Result<u32> {
    cfg.level.ok_or_else(|| Error::Config("this geometry needs a level".into()))
}

/// Mesh for the configured geometry at `level` (or `cfg.h` for custom IFS).
pub fn build_mesh(cfg: &ScatterConfig, geom: &Geometry, level: Option<u32>) -> Result<(LhMesh, Option<crate::lattice::LatticeLayout>)> {
    match geom {
        Geometry::Example(ex) => {
            let l = level.ok_or_else(|| Error::Config("example geometries need a level".into()))?;
            Ok((example_mesh(ex, l)?, None))
        }
        Geometry::Prefractal { h0 } => {
            let j = level.ok_or_else(|| Error::Config("prefractal geometry needs a level".into()))?;
            let pm = build_prefractal_mesh(j, *h0)?;
            Ok((pm.mesh, Some(pm.layout)))
        }
        Geometry::Custom(ifs) => {
            let h = match (cfg.h, level) {
                (Some(h), _) => h,
                (None, Some(l)) => ifs.diam() * ifs.rho_max().powi(l as i32),
                (None, None) => return Err(Error::Config("custom geometry needs h or level".into())),
            };
            Ok((build_lh_mesh(ifs, h)?, None))
        }
    }
}

/// Assembled problem for one level and wavenumber.
pub fn build_problem(
    cfg: &ScatterConfig,
    geom: &Geometry,
    level: Option<u32>,
    k: f64,
    canonical: Option<Arc<CanonicalSystem>>,
) -> Result<Problem> {
    let params = cfg.wave_params(k)?;
    let (mesh, layout) = build_mesh(cfg, geom, level)?;
    match (geom, layout) {
        (Geometry::Example(ex), _) => Problem::new(mesh, Some(*ex), params, cfg.alpha, canonical),
        (_, Some(layout)) => Problem::with_layout(mesh, layout, params, cfg.alpha, canonical),
        (_, None) => Problem::new(mesh, None, params, cfg.alpha, canonical),
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    command: &'a str,
    version: &'a str,
    file: String,
    config: &'a ScatterConfig,
    summary: Value,
}

fn emit(cfg: &ScatterConfig, cmd: Command, path: &Path, summary: Value) -> Result<PathBuf> {
    let file = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    write_sidecar(path, &Sidecar { command: cmd.name(), version: env!("CARGO_PKG_VERSION"), file, config: cfg, summary })
}

fn k_tag(cfg: &ScatterConfig, k: f64) -> String {
    if cfg.sweep_k.is_empty() {
        String::new()
    } else {
        format!("_k{k}")
    }
}

fn cplx(z: Complex64) -> [String; 3] {
    [fmt_f64(z.re), fmt_f64(z.im), fmt_f64(z.norm())]
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Mesh table with lattice columns when available.
pub fn mesh_csv(problem: &Problem) -> Csv {
    let mut csv = Csv::new(&["index_word", "node_x", "node_y", "diam", "measure", "family", "a1", "a2"]);
    for (i, e) in problem.mesh.elements().iter().enumerate() {
        let (fam, a1, a2) = match &problem.layout {
            Some(l) => {
                let c = l.coords[i];
                (l.family_names[c.family as usize].to_string(), c.a1.to_string(), c.a2.to_string())
            }
            None => (String::new(), String::new(), String::new()),
        };
        let word = if e.word.is_empty() { i.to_string() } else { e.word.to_string() };
        csv.row(&[word, fmt_f64(e.node.x), fmt_f64(e.node.y), fmt_f64(e.diam), fmt_f64(e.measure), fam, a1, a2]);
    }
    csv
}

fn solve_summary(problem: &Problem, r: &SolveReport) -> Value {
    json!({
        "n": problem.n(),
        "h": problem.mesh.h(),
        "level": problem.mesh.level(),
        "policy": problem.policy,
        "canonical_classes": problem.canonical.n_s(),
        "method": r.method,
        "iterations": r.iterations,
        "residual_norm": r.residual_norm,
        "cond_estimate": r.cond_estimate,
    })
}

pub fn coefficients_csv(c: &DVector<Complex64>) -> Csv {
    let mut csv = Csv::new(&["index", "re", "im", "abs"]);
    for (i, z) in c.iter().enumerate() {
        let [a, b, d] = cplx(*z);
        csv.row(&[i.to_string(), a, b, d]);
    }
    csv
}

pub fn farfield_csv(thetas: &[f64], values: &[Complex64]) -> Csv {
    let mut csv = Csv::new(&["theta", "re", "im", "abs"]);
    for (t, z) in thetas.iter().zip(values) {
        let [a, b, d] = cplx(*z);
        csv.row(&[fmt_f64(*t), a, b, d]);
    }
    csv
}

pub fn field_csv(grid: &FieldGrid) -> Csv {
    let mut csv = Csv::new(&["ix", "iy", "x", "y", "re", "im", "abs", "inside"]);
    for iy in 0..grid.spec.ny {
        for ix in 0..grid.spec.nx {
            let idx = iy * grid.spec.nx + ix;
            let p = grid.spec.point(ix, iy);
            let [a, b, d] = match grid.values[idx] {
                Some(z) => cplx(z),
                None => [String::new(), String::new(), String::new()],
            };
            csv.row(&[ix.to_string(), iy.to_string(), fmt_f64(p.x), fmt_f64(p.y), a, b, d, (grid.inside[idx] as u8).to_string()]);
        }
    }
    csv
}

/// `max |u(x, y) - u(2c_x - x, y)| / max |u|` over the raster.
pub fn mirror_defect(grid: &FieldGrid) -> Option<f64> {
    let (nx, ny) = (grid.spec.nx, grid.spec.ny);
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for iy in 0..ny {
        for ix in 0..nx {
            let a = grid.values[iy * nx + ix]?;
            let b = grid.values[iy * nx + nx - 1 - ix]?;
            num = num.max((a - b).norm());
            den = den.max(a.norm());
        }
    }
    Some(if den > 0.0 { num / den } else { 0.0 })
}

fn max_rel(a: &[Complex64], reference: &[Complex64]) -> f64 {
    let num = a.iter().zip(reference).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let den = reference.iter().map(|y| y.norm()).fold(0.0, f64::max);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Circle centred at the origin with radius `circle_radius` (default `h₀`).
fn circle(cfg: &ScatterConfig) -> Result<(Vec2, f64)> {
    Ok((Vec2::zeros(), cfg.circle_radius.unwrap_or(cfg.h0()?)))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub level: u32,
    pub h: f64,
    pub n: usize,
    /// `‖u_l - u_ref‖ / ‖u_ref‖` in `L²(Ω)`.
    pub l2_error: f64,
    /// Max far-field error over the angle grid, relative to `max |u_ref^∞|`.
    pub farfield_error: f64,
    /// Max scattered-field error on the circle, relative to the reference maximum.
    pub scattered_error: f64,
    pub eoc_l2: Option<f64>,
    pub eoc_farfield: Option<f64>,
    pub eoc_scattered: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub k: f64,
    pub alpha: u8,
    pub reference_level: u32,
    pub reference_n: usize,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares EOC over the last three levels.
    pub fit_l2: Option<f64>,
    pub fit_farfield: Option<f64>,
    pub fit_scattered: Option<f64>,
}

fn pair_eoc(h0: f64, h1: f64, e0: f64, e1: f64) -> Option<f64> {
    (e0 > 0.0 && e1 > 0.0).then(|| (e1 / e0).ln() / (h1 / h0).ln())
}

fn fit_last3(h: &[f64], e: &[f64]) -> Option<f64> {
    let s = h.len().saturating_sub(3);
    log_slope(&h[s..], &e[s..]).ok()
}

/// Level ladder against a finer reference on nested meshes.
pub fn convergence_study(cfg: &ScatterConfig, k: f64) -> Result<ConvergenceStudy> {
    let Geometry::Example(ex) = geometry(cfg)? else {
        return Err(Error::Config("converge needs a built-in example geometry".into()));
    };
    let geom = Geometry::Example(ex);
    let lref = cfg.reference_level.ok_or_else(|| Error::Config("converge needs reference_level".into()))?;
    if cfg.levels.is_empty() || cfg.levels.iter().any(|&l| l >= lref) {
        return Err(Error::Config("converge needs levels below reference_level".into()));
    }
    let thetas = angles(cfg.farfield_angles);
    let reference = build_problem(cfg, &geom, Some(lref), k, None)?;
    let canonical = Some(Arc::clone(&reference.canonical));
    let rref = solve_problem(&reference, &cfg.solver)?;
    let (centre, radius) = circle(cfg)?;
    let ff_ref = far_field_pattern(&reference, &rref.coefficients, &thetas)?;
    let sc_ref = scattered_on_circle(&reference, &rref.coefficients, &centre, radius, cfg.circle_points)?;
    let ref_norm = rref.coefficients.norm();
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &l in &cfg.levels {
        let p = build_problem(cfg, &geom, Some(l), k, canonical.clone())?;
        let r = solve_problem(&p, &cfg.solver)?;
        let l2 = l2_error_nested(&p.mesh, &r.coefficients, &reference.mesh, &rref.coefficients)?;
        let l2 = if ref_norm > 0.0 { l2 / ref_norm } else { l2 };
        let ff = max_rel(&far_field_pattern(&p, &r.coefficients, &thetas)?, &ff_ref);
        let sc = max_rel(&scattered_on_circle(&p, &r.coefficients, &centre, radius, cfg.circle_points)?, &sc_ref);
        let h = ex.level_width(l);
        let prev = rows.last();
        let eoc = |f: fn(&ConvergenceRow) -> f64, cur: f64| prev.and_then(|q| pair_eoc(q.h, h, f(q), cur));
        rows.push(ConvergenceRow {
            level: l,
            h,
            n: p.n(),
            l2_error: l2,
            farfield_error: ff,
            scattered_error: sc,
            eoc_l2: eoc(|q| q.l2_error, l2),
            eoc_farfield: eoc(|q| q.farfield_error, ff),
            eoc_scattered: eoc(|q| q.scattered_error, sc),
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let col = |f: fn(&ConvergenceRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    Ok(ConvergenceStudy {
        k,
        alpha: cfg.alpha,
        reference_level: lref,
        reference_n: reference.n(),
        fit_l2: fit_last3(&hs, &col(|r| r.l2_error)),
        fit_farfield: fit_last3(&hs, &col(|r| r.farfield_error)),
        fit_scattered: fit_last3(&hs, &col(|r| r.scattered_error)),
        rows,
    })
}

pub fn convergence_csv(study: &ConvergenceStudy) -> Csv {
    let mut csv = Csv::new(&[
        "level", "h", "N", "l2_error", "farfield_error", "scattered_error", "eoc_l2", "eoc_farfield", "eoc_scattered",
    ]);
    for r in &study.rows {
        csv.row(&[
            r.level.to_string(),
            fmt_f64(r.h),
            r.n.to_string(),
            fmt_f64(r.l2_error),
            fmt_f64(r.farfield_error),
            fmt_f64(r.scattered_error),
            opt(r.eoc_l2),
            opt(r.eoc_farfield),
            opt(r.eoc_scattered),
        ]);
    }
    csv
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub method: &'static str,
    pub level: u32,
    pub n: usize,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub k: f64,
    pub reference_level: u32,
    pub rows: Vec<CompareRow>,
    /// Slopes of log error against log N over the last three points of each method.
    pub conforming_slope: Option<f64>,
    pub prefractal_slope: Option<f64>,
    /// For every conforming point with `N ≥ 100` inside the prefractal range, its
    /// error over the log-log interpolated prefractal error at the same `N`.
    pub ratios_at_comparable_n: Vec<(usize, f64)>,
}

fn interp_loglog(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let i = xs.windows(2).position(|w| w[0] <= x && x <= w[1])?;
    let t = (x.ln() - xs[i].ln()) / (xs[i + 1].ln() - xs[i].ln());
    Some((ys[i].ln() * (1.0 - t) + ys[i + 1].ln() * t).exp())
}

/// Conforming ladder and prefractal ladder against the conforming reference,
/// measured by the scattered field on a circle.
pub fn compare_prefractal(cfg: &ScatterConfig, k: f64) -> Result<Comparison> {
    if !matches!(cfg.geometry.name.as_str(), "koch" | "koch-prefractal") {
        return Err(Error::Config("compare-prefractal needs the koch geometry".into()));
    }
    let mut kcfg = cfg.clone();
    kcfg.geometry.name = "koch".into();
    let geom = geometry(&kcfg)?;
    let lref = cfg.reference_level.ok_or_else(|| Error::Config("compare-prefractal needs reference_level".into()))?;
    let reference = build_problem(&kcfg, &geom, Some(lref), k, None)?;
    let rref = solve_problem(&reference, &cfg.solver)?;
    let (centre, radius) = circle(cfg)?;
    let sc_ref = scattered_on_circle(&reference, &rref.coefficients, &centre, radius, cfg.circle_points)?;
    let mut rows = Vec::new();
    let canonical = Some(Arc::clone(&reference.canonical));
    for &l in &cfg.levels {
        let p = build_problem(&kcfg, &geom, Some(l), k, canonical.clone())?;
        let r = solve_problem(&p, &cfg.solver)?;
        let e = max_rel(&scattered_on_circle(&p, &r.coefficients, &centre, radius, cfg.circle_points)?, &sc_ref);
        rows.push(CompareRow { method: "conforming", level: l, n: p.n(), error: e });
    }
    let pgeom = Geometry::Prefractal { h0: cfg.h0()? };
    let mut tri_canonical = None;
    for &j in &cfg.prefractal_levels {
        let p = build_problem(&kcfg, &pgeom, Some(j), k, tri_canonical.clone())?;
        tri_canonical = Some(Arc::clone(&p.canonical));
        let r = solve_problem(&p, &cfg.solver)?;
        let e = max_rel(&scattered_on_circle(&p, &r.coefficients, &centre, radius, cfg.circle_points)?, &sc_ref);
        rows.push(CompareRow { method: "prefractal", level: j, n: p.n(), error: e });
    }
    let series = |m: &str| -> (Vec<f64>, Vec<f64>) {
        rows.iter().filter(|r| r.method == m).map(|r| (r.n as f64, r.error)).unzip()
    };
    let (cn, ce) = series("conforming");
    let (pn, pe) = series("prefractal");
    let ratios = cn
        .iter()
        .zip(&ce)
        .filter(|(n, _)| **n >= 100.0)
        .filter_map(|(n, e)| interp_loglog(&pn, &pe, *n).map(|p| (*n as usize, e / p)))
        .collect();
    Ok(Comparison {
        k,
        reference_level: lref,
        conforming_slope: fit_last3(&cn, &ce),
        prefractal_slope: fit_last3(&pn, &pe),
        ratios_at_comparable_n: ratios,
        rows,
    })
}

pub fn comparison_csv(c: &Comparison) -> Csv {
    let mut csv = Csv::new(&["method", "level", "N", "error"]);
    for r in &c.rows {
        csv.row(&[r.method.to_string(), r.level.to_string(), r.n.to_string(), fmt_f64(r.error)]);
    }
    csv
}

/// Raster spec from the config: a square window around `centre`.
pub fn raster_spec(cfg: &ScatterConfig) -> Result<RasterSpec> {
    let hw = cfg.raster.half_width.unwrap_or(0.75 * cfg.h0()?);
    let spec = RasterSpec::square(Vec2::new(cfg.raster.centre[0], cfg.raster.centre[1]), hw, cfg.raster.n);
    spec.validate()?;
    Ok(spec)
}

/// Run one subcommand; returns the data files written (sidecars not listed).
pub fn run(cmd: Command, cfg: &ScatterConfig) -> Result<Vec<PathBuf>> {
    let out = PathBuf::from(&cfg.output_dir);
    let geom = geometry(cfg)?;
    let mut written = Vec::new();
    match cmd {
        Command::Mesh => {
            let p = build_problem(cfg, &geom, cfg.level, cfg.k, None)?;
            let path = out.join("mesh.csv");
            mesh_csv(&p).write(&path)?;
            emit(cfg, cmd, &path, json!({"n": p.n(), "h": p.mesh.h(), "total_measure": p.mesh.total_measure()}))?;
            written.push(path);
        }
        Command::Solve => {
            let p = build_problem(cfg, &geom, cfg.level, cfg.k, None)?;
            let r = solve_problem(&p, &cfg.solver)?;
            let summary = solve_summary(&p, &r);
            let path = out.join("coefficients.csv");
            coefficients_csv(&r.coefficients).write(&path)?;
            emit(cfg, cmd, &path, summary.clone())?;
            let bin = out.join("coefficients.bin");
            write_complex_vector_bin(&bin, &r.coefficients)?;
            emit(cfg, cmd, &bin, summary.clone())?;
            written.extend([path, bin]);
            if !r.history.is_empty() {
                let mut csv = Csv::new(&["iteration", "relative_residual"]);
                for (i, v) in r.history.iter().enumerate() {
                    csv.row(&[(i + 1).to_string(), fmt_f64(*v)]);
                }
                let path = out.join("gmres_history.csv");
                csv.write(&path)?;
                emit(cfg, cmd, &path, summary.clone())?;
                written.push(path);
            }
            if cfg.dump_matrix {
                if p.n() > cfg.solver.dense_max {
                    return Err(Error::Resource(format!("matrix dump of N = {} exceeds dense_max", p.n())));
                }
                let path = out.join("matrix.bin");
                write_complex_matrix_bin(&path, &dense_matrix(&p)?)?;
                emit(cfg, cmd, &path, summary)?;
                written.push(path);
            }
        }
        Command::Field => {
            let spec = raster_spec(cfg)?;
            let mut canonical = None;
            for k in cfg.wavenumbers() {
                let p = build_problem(cfg, &geom, cfg.level, k, canonical.clone())?;
                canonical = Some(Arc::clone(&p.canonical));
                let r = solve_problem(&p, &cfg.solver)?;
                let grid = field_grid(&p, &r.coefficients, &spec)?;
                let path = out.join(format!("field{}.csv", k_tag(cfg, k)));
                field_csv(&grid).write(&path)?;
                let mut summary = solve_summary(&p, &r);
                summary["k"] = json!(k);
                summary["m"] = json!(cfg.m);
                summary["raster"] = json!(spec);
                summary["missing"] = json!(grid.missing());
                summary["mirror_defect"] = json!(mirror_defect(&grid));
                emit(cfg, cmd, &path, summary)?;
                written.push(path);
            }
        }
        Command::Farfield => {
            let thetas = angles(cfg.farfield_angles);
            let mut canonical = None;
            for k in cfg.wavenumbers() {
                let p = build_problem(cfg, &geom, cfg.level, k, canonical.clone())?;
                canonical = Some(Arc::clone(&p.canonical));
                let r = solve_problem(&p, &cfg.solver)?;
                let ff = far_field_pattern(&p, &r.coefficients, &thetas)?;
                let path = out.join(format!("farfield{}.csv", k_tag(cfg, k)));
                farfield_csv(&thetas, &ff).write(&path)?;
                let mut summary = solve_summary(&p, &r);
                summary["k"] = json!(k);
                emit(cfg, cmd, &path, summary)?;
                written.push(path);
            }
        }
        Command::Converge => {
            for k in cfg.wavenumbers() {
                let study = convergence_study(cfg, k)?;
                let path = out.join(format!("converge{}.csv", k_tag(cfg, k)));
                convergence_csv(&study).write(&path)?;
                emit(cfg, cmd, &path, json!({
                    "k": k,
                    "reference_level": study.reference_level,
                    "reference_n": study.reference_n,
                    "fit_last3": {"l2": study.fit_l2, "farfield": study.fit_farfield, "scattered": study.fit_scattered},
                }))?;
                written.push(path);
            }
        }
        Command::ComparePrefractal => {
            let c = compare_prefractal(cfg, cfg.k)?;
            let path = out.join("compare_prefractal.csv");
            comparison_csv(&c).write(&path)?;
            emit(cfg, cmd, &path, json!({
                "k": c.k,
                "reference_level": c.reference_level,
                "conforming_slope": c.conforming_slope,
                "prefractal_slope": c.prefractal_slope,
                "ratios_at_comparable_n": c.ratios_at_comparable_n,
            }))?;
            written.push(path);
        }
        Command::CanonicalDump => {
            let system = match &geom {
                Geometry::Example(ex) => Arc::new(CanonicalSystem::derive(&Arc::new(ex.attractor()), ClosureOptions::default())?),
                Geometry::Custom(ifs) => Arc::new(CanonicalSystem::derive(ifs, ClosureOptions::default())?),
                Geometry::Prefractal { .. } => build_problem(cfg, &geom, Some(require_level(cfg)?), cfg.k, None)?.canonical,
            };
            let d = system.ifs().diam();
            let widths = if cfg.canonical_widths.is_empty() { vec![d, d / 2.0, d / 4.0] } else { cfg.canonical_widths.clone() };
            let dump = system.dump(&widths)?;
            let path = out.join("canonical.json");
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, serde_json::to_string_pretty(&dump)? + "\n")?;
            emit(cfg, cmd, &path, json!({"n_s": system.n_s(), "n_r": system.n_r(), "condition_number": system.condition_number()}))?;
            written.push(path);
        }
    }
    Ok(written)
}
