//! CSV, binary dumps and JSON sidecars.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;

/// Column-oriented CSV writer with fixed float formatting.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    columns: usize,
}

/// Shortest round-trip representation, so equal values print identically.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { text: header.join(",") + "\n", columns: header.len() }
    }

    /// Append a row of preformatted cells.
    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, &self.text)?;
        Ok(())
    }
}

/// `path` with `.json` appended to the full file name.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write `meta` as pretty JSON next to `path`.
pub fn write_sidecar<T: Serialize>(path: &Path, meta: &T) -> Result<PathBuf> {
    let side = sidecar_path(path);
    if let Some(dir) = side.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(&side, serde_json::to_string_pretty(meta)? + "\n")?;
    Ok(side)
}

/// Binary layout: `u64` count, then interleaved little-endian `f64` real/imaginary parts.
pub fn write_complex_vector_bin(path: &Path, v: &DVector<Complex64>) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + 16 * v.len());
    buf.extend_from_slice(&(v.len() as u64).to_le_bytes());
    for z in v.iter() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

/// Square matrix: `u64` size `N`, then `N²` complex entries in row-major order.
pub fn write_complex_matrix_bin(path: &Path, a: &DMatrix<Complex64>) -> Result<()> {
    let n = a.nrows();
    let mut buf = Vec::with_capacity(8 + 16 * n * n);
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    for i in 0..n {
        for j in 0..a.ncols() {
            buf.extend_from_slice(&a[(i, j)].re.to_le_bytes());
            buf.extend_from_slice(&a[(i, j)].im.to_le_bytes());
        }
    }
    fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

/// Inverse of [`write_complex_vector_bin`].
pub fn read_complex_vector_bin(path: &Path) -> Result<DVector<Complex64>> {
    let bytes = fs::read(path)?;
    let bad = || crate::error::Error::Input(format!("{} is not a complex vector dump", path.display()));
    if bytes.len() < 8 {
        return Err(bad());
    }
    let n = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + 16 * n {
        return Err(bad());
    }
    let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    Ok(DVector::from_fn(n, |i, _| Complex64::new(f(8 + 16 * i), f(16 + 16 * i))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.bin");
        let v = DVector::from_fn(5, |i, _| Complex64::new(i as f64 * 0.1, -(i as f64)));
        write_complex_vector_bin(&p, &v).unwrap();
        assert_eq!(read_complex_vector_bin(&p).unwrap(), v);
        assert_eq!(fs::metadata(&p).unwrap().len(), 8 + 16 * 5);
    }

    #[test]
    fn csv_and_sidecar() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&[fmt_f64(0.1), fmt_f64(2.0)]);
        assert_eq!(c.text(), "a,b\n1e-1,2e0\n");
        assert_eq!(sidecar_path(Path::new("out/x.csv")), PathBuf::from("out/x.csv.json"));
    }
}
