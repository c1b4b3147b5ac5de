//! Field files and tables.
//!
//! HLF1 layout (little endian): the 16-byte header `"HLF1"`, version `u32`,
//! 8 reserved zero bytes; then the `u32` quadruple `(n, N, kind, 0)` with
//! kind 0 for scalar and 1 for Hermitian fields; then `f64` values in
//! row-major axis order `(x_1, y_1, …, x_n, y_n)`. Hermitian fields store the
//! `n × n` row-major entries of each point as `(re, im)` pairs. A JSON sidecar
//! `<file>.json` carries the grid metadata, including the period.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hessianlab_core::grid::{HermitianField, ScalarField, TorusGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HLF1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Scalar,
    Hermitian,
}

impl FieldKind {
    fn code(self) -> u32 {
        match self {
            FieldKind::Scalar => 0,
            FieldKind::Hermitian => 1,
        }
    }
}

/// Contents of the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub format: String,
    pub version: u32,
    pub kind: FieldKind,
    pub n: usize,
    pub points_per_axis: usize,
    pub period: f64,
    pub axis_order: Vec<String>,
    pub values: usize,
}

/// Path of the sidecar belonging to `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn axis_names(n: usize) -> Vec<String> {
    (1..=n).flat_map(|k| [format!("x{k}"), format!("y{k}")]).collect()
}

fn encode(grid: &TorusGrid, kind: FieldKind, payload: &[f64]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * payload.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&[0u8; 8]);
    for v in [grid.dim() as u32, grid.points_per_axis() as u32, kind.code(), 0] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in payload {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

fn write_file(path: &Path, grid: &TorusGrid, kind: FieldKind, payload: &[f64]) -> Result<()> {
    let bytes = encode(grid, kind, payload);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let side = Sidecar {
        format: "HLF1".into(),
        version: VERSION,
        kind,
        n: grid.dim(),
        points_per_axis: grid.points_per_axis(),
        period: grid.period(),
        axis_order: axis_names(grid.dim()),
        values: payload.len(),
    };
    write_json(&sidecar_path(path), &side)
}

pub fn write_scalar(path: &Path, field: &ScalarField) -> Result<()> {
    write_file(path, field.grid(), FieldKind::Scalar, field.values())
}

pub fn write_hermitian(path: &Path, field: &HermitianField) -> Result<()> {
    let payload: Vec<f64> = field.to_entries().iter().flat_map(|z| [z.re, z.im]).collect();
    write_file(path, field.grid(), FieldKind::Hermitian, &payload)
}

/// Header fields and payload of an HLF1 file.
struct Raw {
    n: usize,
    points: usize,
    kind: u32,
    payload: Vec<f64>,
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

fn decode(path: &Path, bytes: &[u8]) -> Result<Raw> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(path, "shorter than the 32-byte header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format(path, "bad magic"));
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let body = &bytes[HEADER_LEN..];
    if !body.len().is_multiple_of(8) {
        return Err(Error::format(path, "payload is not a whole number of f64 values"));
    }
    let payload = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok(Raw { n: read_u32(bytes, 16) as usize, points: read_u32(bytes, 20) as usize, kind: read_u32(bytes, 24), payload })
}

fn read_raw(path: &Path) -> Result<(Raw, TorusGrid)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let raw = decode(path, &bytes)?;
    let side_path = sidecar_path(path);
    let text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let side: Sidecar = serde_json::from_str(&text)?;
    if side.n != raw.n || side.points_per_axis != raw.points || side.kind.code() != raw.kind {
        return Err(Error::format(path, "sidecar disagrees with the header"));
    }
    let grid = TorusGrid::new(raw.n, raw.points, side.period)?;
    Ok((raw, grid))
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    let (raw, grid) = read_raw(path)?;
    if raw.kind != FieldKind::Scalar.code() {
        return Err(Error::format(path, "expected a scalar field"));
    }
    if raw.payload.len() != grid.len() {
        return Err(Error::format(path, format!("{} values for {} grid points", raw.payload.len(), grid.len())));
    }
    Ok(ScalarField::new(grid, raw.payload)?)
}

pub fn read_hermitian(path: &Path) -> Result<HermitianField> {
    let (raw, grid) = read_raw(path)?;
    if raw.kind != FieldKind::Hermitian.code() {
        return Err(Error::format(path, "expected a Hermitian field"));
    }
    let expected = 2 * grid.len() * raw.n * raw.n;
    if raw.payload.len() != expected {
        return Err(Error::format(path, format!("{} values, expected {expected}", raw.payload.len())));
    }
    let entries = raw.payload.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(HermitianField::pointwise(grid, entries)?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Writes one row per record with the serialized field names as header.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `(coordinate, value)` rows along one real axis through `point`.
pub fn line_slice(field: &ScalarField, axis: usize, point: usize) -> Vec<(f64, f64)> {
    let grid = field.grid();
    let h = grid.spacing();
    let c = grid.coord(point, axis) as isize;
    (0..grid.points_per_axis())
        .map(|k| {
            let p = grid.shift(point, axis, k as isize - c);
            (k as f64 * h, field.values()[p])
        })
        .collect()
}

/// `(a, b, value)` rows over the plane of `axes` through `point`.
pub fn plane_slice(field: &ScalarField, axes: (usize, usize), point: usize) -> Vec<(f64, f64, f64)> {
    let grid = field.grid();
    let h = grid.spacing();
    let np = grid.points_per_axis();
    let (ca, cb) = (grid.coord(point, axes.0) as isize, grid.coord(point, axes.1) as isize);
    let mut rows = Vec::with_capacity(np * np);
    for i in 0..np {
        let pi = grid.shift(point, axes.0, i as isize - ca);
        for j in 0..np {
            let p = grid.shift(pi, axes.1, j as isize - cb);
            rows.push((i as f64 * h, j as f64 * h, field.values()[p]));
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let grid = TorusGrid::new(1, 4, 1.0).unwrap();
        let bytes = encode(&grid, FieldKind::Scalar, &[1.0; 16]);
        assert_eq!(&bytes[..4], b"HLF1");
        assert_eq!(read_u32(&bytes, 4), 1);
        assert_eq!(&bytes[8..16], &[0u8; 8]);
        assert_eq!((read_u32(&bytes, 16), read_u32(&bytes, 20), read_u32(&bytes, 24)), (1, 4, 0));
        assert_eq!(bytes.len(), 32 + 16 * 8);
    }

    #[test]
    fn decode_rejects_garbage() {
        let p = Path::new("x");
        assert!(decode(p, b"HLF").is_err());
        assert!(decode(p, &[0u8; 40]).is_err());
    }
}
