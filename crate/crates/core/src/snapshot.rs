//! Field snapshots: raw little-endian f64 (re, im) pairs in row-major order,
//! next to a JSON manifest naming the grid, the time stamp, and the state.
//! Ground-state snapshots carry the chemical potential in the optional `mu`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field1D, Field2D};
use crate::grid::{Grid1D, Grid2D};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest2D {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Ly")]
    pub ly: f64,
    pub t: f64,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest1D {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub t: f64,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

/// `<name>_<t>` with the time fixed to six decimals, so runs with the same
/// sampling grid overwrite deterministically. The stem contains a dot, so the
/// two paths are built by appending rather than by swapping extensions.
fn paths(dir: &Path, name: &str, t: f64) -> (PathBuf, PathBuf) {
    let stem = format!("{name}_{t:.6}");
    (dir.join(format!("{stem}.bin")), dir.join(format!("{stem}.json")))
}

/// A snapshot's manifest path: the .bin path with `.json` in place of `.bin`.
fn manifest_path(bin: &Path) -> Result<PathBuf> {
    let s = bin.to_str().ok_or_else(|| {
        Error::Manifest(format!("{} is not valid unicode", bin.display()))
    })?;
    let stem = s.strip_suffix(".bin").ok_or_else(|| {
        Error::Manifest(format!("{} does not end in .bin", bin.display()))
    })?;
    Ok(PathBuf::from(format!("{stem}.json")))
}

fn write_values(path: &Path, values: &[Complex64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 16);
    for v in values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn read_values(path: &Path, expected: usize) -> Result<Vec<Complex64>> {
    let bytes = fs::read(path)?;
    if bytes.len() != expected * 16 {
        return Err(Error::Manifest(format!(
            "{} holds {} bytes, expected {} for {} samples",
            path.display(),
            bytes.len(),
            expected * 16,
            expected
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect())
}

/// Write `<dir>/<name>_<t>.bin` and its manifest; returns the .bin path.
pub fn write_snapshot_2d(
    dir: &Path,
    name: &str,
    t: f64,
    psi: &Field2D,
    mu: Option<f64>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let g = psi.grid();
    let manifest = Manifest2D {
        nx: g.nx(),
        ny: g.ny(),
        lx: g.lx(),
        ly: g.ly(),
        t,
        name: name.to_string(),
        mu,
    };
    let (bin, json) = paths(dir, name, t);
    write_values(&bin, psi.values())?;
    fs::write(json, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(bin)
}

/// Read a 2D snapshot back from its .bin path (the manifest sits next to it).
pub fn read_snapshot_2d(bin: &Path) -> Result<(Field2D, Manifest2D)> {
    let manifest: Manifest2D = serde_json::from_slice(&fs::read(manifest_path(bin)?)?)?;
    let grid = Grid2D::new(manifest.nx, manifest.ny, manifest.lx, manifest.ly)
        .map_err(|e| Error::Manifest(format!("{}: {e}", bin.display())))?;
    let values = read_values(bin, grid.len())?;
    let field = Field2D::new(grid, values)
        .map_err(|e| Error::Manifest(format!("{}: {e}", bin.display())))?;
    Ok((field, manifest))
}

/// Write `<dir>/<name>_<t>.bin` and its manifest; returns the .bin path.
pub fn write_snapshot_1d(
    dir: &Path,
    name: &str,
    t: f64,
    phi: &Field1D,
    mu: Option<f64>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let g = phi.grid();
    let manifest = Manifest1D { n: g.n(), l: g.l(), t, name: name.to_string(), mu };
    let (bin, json) = paths(dir, name, t);
    write_values(&bin, phi.values())?;
    fs::write(json, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(bin)
}

/// Read a 1D snapshot back from its .bin path (the manifest sits next to it).
pub fn read_snapshot_1d(bin: &Path) -> Result<(Field1D, Manifest1D)> {
    let manifest: Manifest1D = serde_json::from_slice(&fs::read(manifest_path(bin)?)?)?;
    let grid = Grid1D::new(manifest.n, manifest.l)
        .map_err(|e| Error::Manifest(format!("{}: {e}", bin.display())))?;
    let values = read_values(bin, grid.n())?;
    let field = Field1D::new(grid, values)
        .map_err(|e| Error::Manifest(format!("{}: {e}", bin.display())))?;
    Ok((field, manifest))
}
