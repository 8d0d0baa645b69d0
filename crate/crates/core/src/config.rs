//! Experiment configuration: defaults, presets, JSON files and key overrides.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::builtin::Example;
use crate::error::{Error, Result};
use crate::kernel::{Incident, WaveParams};
use crate::solve::SolverOptions;

/// Environment variable for the worker thread count (config `threads` wins).
pub const THREADS_ENV: &str = "IFS_SCATTER_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// `fudgeflake`, `gosper`, `koch`, `koch-prefractal`, `unit-square` or `file`.
    pub name: String,
    /// Koch diameter (also the prefractal scale).
    pub h0: Option<f64>,
    /// IFS JSON file for `file`.
    pub path: Option<String>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { name: "fudgeflake".into(), h0: None, path: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RasterConfig {
    /// Pixels per side.
    pub n: usize,
    /// Half the side of the square window; defaults to `0.75·h₀`.
    pub half_width: Option<f64>,
    pub centre: [f64; 2],
}

impl Default for RasterConfig {
    fn default() -> Self {
        RasterConfig { n: 48, half_width: None, centre: [0.0, 0.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatterConfig {
    pub preset: Option<String>,
    pub geometry: GeometryConfig,
    pub k: f64,
    /// Wavenumbers swept by `farfield`, `field` and `converge`; `[k]` when empty.
    pub sweep_k: Vec<f64>,
    /// Contrast `m` as `[re, im]`.
    pub m: Complex64,
    pub incident: Incident,
    pub level: Option<u32>,
    /// Mesh width for geometries without levels.
    pub h: Option<f64>,
    pub alpha: u8,
    pub solver: SolverOptions,
    /// Convergence ladder.
    pub levels: Vec<u32>,
    pub reference_level: Option<u32>,
    pub prefractal_levels: Vec<u32>,
    pub farfield_angles: usize,
    pub circle_points: usize,
    /// Radius of the scattered-field circle; defaults to `h₀`.
    pub circle_radius: Option<f64>,
    pub raster: RasterConfig,
    /// `h_s` values for `canonical-dump`; defaults to `h₀, h₀/2, h₀/4`.
    pub canonical_widths: Vec<f64>,
    pub dump_matrix: bool,
    pub threads: Option<usize>,
    pub output_dir: String,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        ScatterConfig {
            preset: None,
            geometry: GeometryConfig::default(),
            k: 5.0,
            sweep_k: Vec::new(),
            m: Complex64::new(1.0, 0.0),
            incident: Incident::PlaneWave { direction: [0.0, 1.0] },
            level: Some(3),
            h: None,
            alpha: 1,
            solver: SolverOptions::default(),
            levels: vec![2, 3, 4, 5],
            reference_level: Some(7),
            prefractal_levels: vec![1, 2, 3, 4],
            farfield_angles: 360,
            circle_points: 64,
            circle_radius: None,
            raster: RasterConfig::default(),
            canonical_widths: Vec::new(),
            dump_matrix: false,
            threads: None,
            output_dir: "out".into(),
        }
    }
}

/// Preset patch and its level cap.
pub fn preset(name: &str) -> Result<(Value, u32)> {
    match name {
        "quick" => Ok((
            serde_json::json!({
                "k": 5.0, "sweep_k": [], "level": 3, "levels": [1, 2, 3], "reference_level": 4,
                "prefractal_levels": [1, 2], "raster": {"n": 24}
            }),
            4,
        )),
        "paper-lite" => Ok((
            serde_json::json!({
                "k": 5.0, "sweep_k": [5.0, 15.0], "level": 5, "levels": [2, 3, 4, 5], "reference_level": 6,
                "prefractal_levels": [1, 2, 3], "raster": {"n": 64}
            }),
            6,
        )),
        _ => Err(Error::Config(format!("unknown preset '{name}' (expected quick or paper-lite)"))),
    }
}

/// Recursive object merge; `patch` wins.
pub fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// Parse a `key.path=value` override; the value is JSON, or a bare string.
pub fn parse_override(s: &str) -> Result<Value> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{s}' is not of the form key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut out = value;
    for part in key.split('.').rev() {
        if part.is_empty() {
            return Err(Error::Config(format!("override '{s}' has an empty key segment")));
        }
        let mut m = Map::new();
        m.insert(part.to_string(), out);
        out = Value::Object(m);
    }
    Ok(out)
}

impl ScatterConfig {
    /// Defaults, then preset, then file, then overrides (in order).
    pub fn resolve(file: Option<&Path>, preset_flag: Option<&str>, overrides: &[Value]) -> Result<Self> {
        let file_value = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| Error::Config(format!("config {} is not valid JSON: {e}", p.display())))?
            }
            None => Value::Object(Map::new()),
        };
        let preset_name = preset_flag
            .map(str::to_string)
            .or_else(|| file_value.get("preset").and_then(Value::as_str).map(str::to_string));
        let mut v = serde_json::to_value(ScatterConfig::default())?;
        let mut cap = None;
        if let Some(name) = &preset_name {
            let (patch, c) = preset(name)?;
            merge(&mut v, &patch);
            cap = Some(c);
        }
        merge(&mut v, &file_value);
        for o in overrides {
            merge(&mut v, o);
        }
        if let Some(name) = preset_name {
            v["preset"] = Value::String(name);
        }
        let cfg: ScatterConfig = serde_json::from_value(v).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate(cap)?;
        Ok(cfg)
    }

    pub fn h0(&self) -> Result<f64> {
        match self.geometry.name.as_str() {
            "koch" | "koch-prefractal" => Ok(self.geometry.h0.unwrap_or(crate::builtin::KOCH_DEFAULT_H0)),
            "fudgeflake" | "gosper" => Ok(Example::by_name(&self.geometry.name, None)?.h0()),
            "unit-square" => Ok(2f64.sqrt()),
            "file" => Ok(crate::harness::load_ifs_file(self)?.diam()),
            other => Err(Error::Config(format!("unknown geometry '{other}'"))),
        }
    }

    /// Built-in example, if the geometry is one.
    pub fn example(&self) -> Result<Option<Example>> {
        match self.geometry.name.as_str() {
            "fudgeflake" | "gosper" | "koch" => Ok(Some(Example::by_name(&self.geometry.name, self.geometry.h0)?)),
            _ => Ok(None),
        }
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        if self.sweep_k.is_empty() {
            vec![self.k]
        } else {
            self.sweep_k.clone()
        }
    }

    pub fn wave_params(&self, k: f64) -> Result<WaveParams> {
        WaveParams::new(k, self.m, self.incident)
    }

    fn level_cap(&self) -> Result<u32> {
        Ok(match self.geometry.name.as_str() {
            "koch-prefractal" => 6,
            _ => match self.example()? {
                Some(ex) => ex.level_cap(),
                None => 30,
            },
        })
    }

    pub fn validate(&self, preset_cap: Option<u32>) -> Result<()> {
        let cap = self.level_cap()?;
        let mut all: Vec<u32> = self.levels.clone();
        all.extend(self.level);
        all.extend(self.reference_level);
        for &l in &all {
            if l > cap {
                return Err(Error::Config(format!("level {l} exceeds the cap {cap} for {}", self.geometry.name)));
            }
            if let Some(pc) = preset_cap {
                if l > pc {
                    return Err(Error::Config(format!("level {l} exceeds the preset cap {pc}")));
                }
            }
        }
        if let Some(&j) = self.prefractal_levels.iter().max() {
            if j > 6 {
                return Err(Error::Config(format!("prefractal level {j} exceeds the cap 6")));
            }
        }
        for k in self.wavenumbers() {
            self.wave_params(k)?;
        }
        if self.alpha != 1 && self.alpha != 2 {
            return Err(Error::Config(format!("alpha must be 1 or 2, got {}", self.alpha)));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.farfield_angles == 0 || self.circle_points == 0 {
            return Err(Error::Config("farfield_angles and circle_points must be positive".into()));
        }
        if let Some(h) = self.h {
            if !(h > 0.0) {
                return Err(Error::Config("h must be positive".into()));
            }
        }
        self.h0()?;
        Ok(())
    }

    /// Thread count from the config, else the environment.
    pub fn thread_count(&self) -> Result<Option<usize>> {
        if let Some(t) = self.threads {
            return Ok(Some(t));
        }
        match std::env::var(THREADS_ENV) {
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&t| t > 0)
                .map(Some)
                .ok_or_else(|| Error::Config(format!("{THREADS_ENV}='{s}' is not a positive integer"))),
            Err(_) => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering_order() {
        let o = [parse_override("k=7.5").unwrap(), parse_override("geometry.name=koch").unwrap()];
        let c = ScatterConfig::resolve(None, Some("quick"), &o).unwrap();
        assert_eq!(c.k, 7.5);
        assert_eq!(c.geometry.name, "koch");
        assert_eq!(c.reference_level, Some(4));
        assert_eq!(c.preset.as_deref(), Some("quick"));
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |s: &str| ScatterConfig::resolve(None, None, &[parse_override(s).unwrap()]).unwrap_err();
        assert!(matches!(bad("m=[1.0,-0.5]"), Error::Config(_)));
        assert!(matches!(bad("level=13"), Error::Config(_)));
        assert!(matches!(bad("no_such_key=1"), Error::Config(_)));
        assert!(matches!(bad("alpha=3"), Error::Config(_)));
        let e = ScatterConfig::resolve(None, Some("quick"), &[parse_override("level=5").unwrap()]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
