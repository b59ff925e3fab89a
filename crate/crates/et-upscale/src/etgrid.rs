//! ETGRID v1 raster files and CSV export.
//!
//! Layout: the 8 bytes `ETGRID01`, a little-endian u32 header length, a
//! UTF-8 JSON header `{spec, date, unit, n_rows, n_cols}`, then
//! `n_rows * n_cols` little-endian f32 values, row-major, north to south.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use et_upscale_core::grid::{EtGrid, EtUnit, GridSpec};
use serde::{Deserialize, Serialize};

use crate::ingest::write_file;

pub const MAGIC: &[u8; 8] = b"ETGRID01";

#[derive(Debug, thiserror::Error)]
pub enum GridIoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("not an ETGRID v1 file (bad magic)")]
    BadMagic,
    #[error("file truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("bad header: {0}")]
    Header(String),
    #[error("payload is {found} bytes, header implies {expected}")]
    PayloadLength { expected: usize, found: usize },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    spec: GridSpec,
    date: NaiveDate,
    unit: EtUnit,
    n_rows: usize,
    n_cols: usize,
}

pub fn encode_grid(grid: &EtGrid) -> Vec<u8> {
    let header = Header {
        spec: grid.spec,
        date: grid.date,
        unit: grid.unit,
        n_rows: grid.spec.n_rows(),
        n_cols: grid.spec.n_cols(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(12 + json.len() + 4 * grid.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in &grid.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_grid(bytes: &[u8]) -> Result<EtGrid, GridIoError> {
    if bytes.len() < 12 {
        return Err(if bytes.len() >= 8 && &bytes[..8] != MAGIC {
            GridIoError::BadMagic
        } else {
            GridIoError::Truncated { needed: 12, have: bytes.len() }
        });
    }
    if &bytes[..8] != MAGIC {
        return Err(GridIoError::BadMagic);
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = 12usize.checked_add(hlen).ok_or(GridIoError::Header("header length overflows".into()))?;
    if bytes.len() < body {
        return Err(GridIoError::Truncated { needed: body, have: bytes.len() });
    }
    let header: Header = serde_json::from_slice(&bytes[12..body]).map_err(|e| GridIoError::Header(e.to_string()))?;
    header.spec.validate().map_err(|e| GridIoError::Header(e.to_string()))?;
    if (header.n_rows, header.n_cols) != (header.spec.n_rows(), header.spec.n_cols()) {
        return Err(GridIoError::Header(format!(
            "n_rows/n_cols {}x{} disagree with spec {}x{}",
            header.n_rows,
            header.n_cols,
            header.spec.n_rows(),
            header.spec.n_cols()
        )));
    }
    let expected = header.n_rows * header.n_cols * 4;
    let payload = &bytes[body..];
    if payload.len() < expected {
        return Err(GridIoError::Truncated { needed: body + expected, have: bytes.len() });
    }
    if payload.len() != expected {
        return Err(GridIoError::PayloadLength { expected, found: payload.len() });
    }
    let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    Ok(EtGrid { spec: header.spec, date: header.date, unit: header.unit, values })
}

pub fn write_grid(grid: &EtGrid, path: &Path) -> Result<(), GridIoError> {
    write_file(path, &encode_grid(grid)).map_err(|e| GridIoError::Io { path: path.into(), source: e })
}

pub fn read_grid(path: &Path) -> Result<EtGrid, GridIoError> {
    let bytes = fs::read(path).map_err(|e| GridIoError::Io { path: path.into(), source: e })?;
    decode_grid(&bytes)
}

/// `et_YYYY-MM-DD.etg`.
pub fn daily_file_name(date: NaiveDate) -> String {
    format!("et_{}.etg", date.format("%Y-%m-%d"))
}

/// `et_YYYY-MM.etg`.
pub fn monthly_file_name(date: NaiveDate) -> String {
    format!("et_{}.etg", date.format("%Y-%m"))
}

/// `lat,lon,value` per cell centre, north-west first; NaN cells have an
/// empty value.
pub fn grid_to_csv_string(grid: &EtGrid) -> String {
    let mut s = String::from("lat,lon,value\n");
    let n_cols = grid.spec.n_cols();
    for (i, v) in grid.values.iter().enumerate() {
        let (lat, lon) = grid.spec.cell_center(i / n_cols, i % n_cols);
        if v.is_nan() {
            s.push_str(&format!("{lat},{lon},\n"));
        } else {
            s.push_str(&format!("{lat},{lon},{v}\n"));
        }
    }
    s
}

pub fn grid_to_csv(grid: &EtGrid, path: &Path) -> Result<(), GridIoError> {
    write_file(path, grid_to_csv_string(grid).as_bytes()).map_err(|e| GridIoError::Io { path: path.into(), source: e })
}
