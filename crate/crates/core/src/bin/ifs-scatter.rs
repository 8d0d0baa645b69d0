use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use ifs_scatter::config::{parse_override, ScatterConfig};
use ifs_scatter::error::{Error, Result};
use ifs_scatter::harness::{run, Command};

/// Acoustic scattering by IFS-attractor fractals: meshes, solves and studies.
#[derive(Parser, Debug)]
#[command(name = "ifs-scatter", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Mesh table (CSV).
    Mesh(Args),
    /// Solve the Galerkin system and write the coefficients.
    Solve(Args),
    /// Total field on a raster.
    Field(Args),
    /// Far-field pattern.
    Farfield(Args),
    /// Level ladder against a reference level, with EOC columns.
    Converge(Args),
    /// Conforming versus prefractal errors (Koch only).
    ComparePrefractal(Args),
    /// Canonical singular system as JSON.
    CanonicalDump(Args),
}

impl Cmd {
    fn split(self) -> (Command, Args) {
        match self {
            Cmd::Mesh(a) => (Command::Mesh, a),
            Cmd::Solve(a) => (Command::Solve, a),
            Cmd::Field(a) => (Command::Field, a),
            Cmd::Farfield(a) => (Command::Farfield, a),
            Cmd::Converge(a) => (Command::Converge, a),
            Cmd::ComparePrefractal(a) => (Command::ComparePrefractal, a),
            Cmd::CanonicalDump(a) => (Command::CanonicalDump, a),
        }
    }
}

/// Flags mirror config keys; `--set` reaches nested ones.
#[derive(clap::Args, Debug)]
struct Args {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset: quick | paper-lite.
    #[arg(long)]
    preset: Option<String>,
    /// Override any config key, e.g. `--set solver.kind=gmres-lattice` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    h0: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    /// Contrast as `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    alpha: Option<u8>,
    /// Convergence ladder, comma separated.
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    reference_level: Option<u32>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    output_dir: Option<String>,
}

fn overrides(a: &Args) -> Result<Vec<Value>> {
    let mut out = Vec::new();
    let mut push = |key: &str, v: Value| {
        let mut o = serde_json::Map::new();
        o.insert(key.to_string(), v);
        out.push(Value::Object(o));
    };
    if let Some(g) = &a.geometry {
        push("geometry", serde_json::json!({ "name": g }));
    }
    if let Some(h0) = a.h0 {
        push("geometry", serde_json::json!({ "h0": h0 }));
    }
    if let Some(k) = a.k {
        push("k", k.into());
    }
    if let Some(m) = &a.m {
        let parts: Vec<f64> = m
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("--m expects re,im but got '{m}'")))?;
        match parts.as_slice() {
            [re] => push("m", serde_json::json!([re, 0.0])),
            [re, im] => push("m", serde_json::json!([re, im])),
            _ => return Err(Error::Config(format!("--m expects re,im but got '{m}'"))),
        }
    }
    if let Some(l) = a.level {
        push("level", l.into());
    }
    if let Some(h) = a.h {
        push("h", h.into());
    }
    if let Some(al) = a.alpha {
        push("alpha", al.into());
    }
    if let Some(ls) = &a.levels {
        let v: Vec<u32> = ls
            .split(',')
            .map(|s| s.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("--levels expects a comma-separated list, got '{ls}'")))?;
        push("levels", serde_json::json!(v));
    }
    if let Some(r) = a.reference_level {
        push("reference_level", r.into());
    }
    if let Some(t) = a.threads {
        push("threads", t.into());
    }
    if let Some(o) = &a.output_dir {
        push("output_dir", o.clone().into());
    }
    for s in &a.set {
        out.push(parse_override(s)?);
    }
    Ok(out)
}

fn main_inner(cli: Cli) -> Result<()> {
    let (cmd, a) = cli.command.split();
    let cfg = ScatterConfig::resolve(a.config.as_deref(), a.preset.as_deref(), &overrides(&a)?)?;
    if let Some(t) = cfg.thread_count()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    }
    let start = std::time::Instant::now();
    for p in run(cmd, &cfg)? {
        println!("{}", p.display());
    }
    eprintln!("{} finished in {:.2?}", cmd.name(), start.elapsed());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
