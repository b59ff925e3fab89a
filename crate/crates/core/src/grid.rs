//! Gridded inference, unit conversion and monthly aggregation.
//!
//! Grids are regular in latitude/longitude. Row 0 is the northernmost row,
//! column 0 the westernmost column, and values are stored row-major.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::dataset::{ReflectanceIndex, SiteMeta};
use crate::features::{assemble_features, FeatureSchema, FeatureVector, MeteoWindow};
use crate::gbdt::Ensemble;
use crate::par;
use crate::physics::{GeoTime, W_M2_TO_MM_DAY};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("invalid grid spec: {0}")]
    Spec(String),
    #[error("provider schema {provider:#018x} does not match model schema {model:#018x}")]
    SchemaMismatch { model: u64, provider: u64 },
    #[error("feature vector for cell ({row}, {col}) has the wrong schema")]
    CellSchema { row: usize, col: usize },
    #[error("cannot convert {from} to {to}")]
    UnsupportedConversion { from: EtUnit, to: EtUnit },
    #[error("monthly aggregation needs at least one daily grid")]
    NoGrids,
    #[error("grids do not share one spec")]
    MixedSpecs,
    #[error("grids span more than one month ({0} and {1})")]
    MixedMonths(NaiveDate, NaiveDate),
    #[error("daily grid for {0} is in {1}, expected mm day-1")]
    WrongUnit(NaiveDate, EtUnit),
    #[error("duplicate daily grid for {0}")]
    DuplicateDate(NaiveDate),
    #[error("month {year}-{month:02} is incomplete: {found} of {expected} days")]
    IncompleteMonth { year: i32, month: u32, found: usize, expected: usize },
    #[error("value array has {found} cells, spec needs {expected}")]
    Shape { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    /// Cell edge length, degrees.
    pub cell_deg: f64,
}

impl Default for GridSpec {
    /// The released product's domain at ~500 m.
    fn default() -> Self {
        GridSpec { lat_min: 36.0, lat_max: 49.0, lon_min: -104.0, lon_max: -82.0, cell_deg: 0.0045 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        let all = [self.lat_min, self.lat_max, self.lon_min, self.lon_max, self.cell_deg];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(GridError::Spec("bounds and cell size must be finite".into()));
        }
        if self.lat_max <= self.lat_min || self.lon_max <= self.lon_min {
            return Err(GridError::Spec("max bounds must exceed min bounds".into()));
        }
        if self.cell_deg <= 0.0 {
            return Err(GridError::Spec("cell_deg must be positive".into()));
        }
        if self.lat_min < -90.0 || self.lat_max > 90.0 {
            return Err(GridError::Spec("latitudes must lie in [-90, 90]".into()));
        }
        if self.n_rows() < 1 || self.n_cols() < 1 {
            return Err(GridError::Spec("cell_deg larger than twice the domain".into()));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        libm::round((self.lat_max - self.lat_min) / self.cell_deg) as usize
    }

    pub fn n_cols(&self) -> usize {
        libm::round((self.lon_max - self.lon_min) / self.cell_deg) as usize
    }

    pub fn n_cells(&self) -> usize {
        self.n_rows() * self.n_cols()
    }

    /// Centre of cell (row, col) as (lat, lon).
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let half = self.cell_deg / 2.0;
        (self.lat_max - row as f64 * self.cell_deg - half, self.lon_min + col as f64 * self.cell_deg + half)
    }

    /// Cell containing (lat, lon), if inside the grid.
    pub fn cell_of(&self, lat: f64, lon: f64) -> Option<(usize, usize)> {
        let r = libm::floor((self.lat_max - lat) / self.cell_deg);
        let c = libm::floor((lon - self.lon_min) / self.cell_deg);
        if !(r >= 0.0 && c >= 0.0) {
            return None;
        }
        let (r, c) = (r as usize, c as usize);
        (r < self.n_rows() && c < self.n_cols()).then_some((r, c))
    }
}

/// Identifier used for grid cells in gridded-input tables.
pub fn cell_id(row: usize, col: usize) -> String {
    format!("r{row}c{col}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EtUnit {
    #[serde(rename = "W m-2")]
    WattsPerM2,
    #[serde(rename = "mm day-1")]
    MmPerDay,
    #[serde(rename = "mm month-1")]
    MmPerMonth,
}

impl EtUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            EtUnit::WattsPerM2 => "W m-2",
            EtUnit::MmPerDay => "mm day-1",
            EtUnit::MmPerMonth => "mm month-1",
        }
    }
}

impl core::fmt::Display for EtUnit {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for EtUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "w m-2" | "w/m2" | "wm2" | "w" => Ok(EtUnit::WattsPerM2),
            "mm day-1" | "mm/day" | "mm_day" => Ok(EtUnit::MmPerDay),
            "mm month-1" | "mm/month" | "mm_month" => Ok(EtUnit::MmPerMonth),
            _ => Err(format!("unknown ET unit {s:?}")),
        }
    }
}

/// One day (or month) of gridded ET. NaN marks missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct EtGrid {
    pub spec: GridSpec,
    pub date: NaiveDate,
    pub unit: EtUnit,
    pub values: Vec<f32>,
}

impl EtGrid {
    pub fn new(spec: GridSpec, date: NaiveDate, unit: EtUnit, values: Vec<f32>) -> Result<EtGrid, GridError> {
        spec.validate()?;
        if values.len() != spec.n_cells() {
            return Err(GridError::Shape { expected: spec.n_cells(), found: values.len() });
        }
        Ok(EtGrid { spec, date, unit, values })
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.spec.n_cols() + col]
    }

    /// Bitwise equality, which treats NaNs with equal payloads as equal.
    pub fn bit_eq(&self, other: &EtGrid) -> bool {
        self.spec == other.spec
            && self.date == other.date
            && self.unit == other.unit
            && self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Supplies the model input for a cell centre on a date.
pub trait FeatureProvider: Sync {
    fn schema(&self) -> &FeatureSchema;
    fn features(&self, lat: f64, lon: f64, date: NaiveDate) -> Option<FeatureVector>;
}

/// Predicts every cell in W·m⁻². Cells without inputs are NaN.
///
/// Rows are evaluated in parallel under `std`; every cell is computed by
/// exactly the same code path as [`Ensemble::predict`], so the result does
/// not depend on the thread count.
pub fn predict_grid<P: FeatureProvider + ?Sized>(
    model: &Ensemble,
    provider: &P,
    spec: &GridSpec,
    date: NaiveDate,
) -> Result<EtGrid, GridError> {
    spec.validate()?;
    let provider_fp = provider.schema().fingerprint();
    if provider_fp != model.schema.fingerprint() {
        return Err(GridError::SchemaMismatch { model: model.schema.fingerprint(), provider: provider_fp });
    }
    let n_cols = spec.n_cols();
    let rows: Vec<Result<Vec<f32>, GridError>> = par::map_indexed(spec.n_rows(), |row| {
        (0..n_cols)
            .map(|col| {
                let (lat, lon) = spec.cell_center(row, col);
                match provider.features(lat, lon, date) {
                    None => Ok(f32::NAN),
                    Some(v) => model.predict(&v).map(|p| p as f32).map_err(|_| GridError::CellSchema { row, col }),
                }
            })
            .collect()
    });
    let mut values = Vec::with_capacity(spec.n_cells());
    for r in rows {
        values.extend(r?);
    }
    Ok(EtGrid { spec: *spec, date, unit: EtUnit::WattsPerM2, values })
}

/// Converts between W·m⁻² and mm·day⁻¹. Monthly sums are not convertible.
pub fn convert_units(grid: &EtGrid, target: EtUnit) -> Result<EtGrid, GridError> {
    let factor = match (grid.unit, target) {
        (a, b) if a == b => return Ok(grid.clone()),
        (EtUnit::WattsPerM2, EtUnit::MmPerDay) => W_M2_TO_MM_DAY,
        (EtUnit::MmPerDay, EtUnit::WattsPerM2) => 1.0 / W_M2_TO_MM_DAY,
        (from, to) => return Err(GridError::UnsupportedConversion { from, to }),
    };
    let values = grid.values.iter().map(|&v| (f64::from(v) * factor) as f32).collect();
    Ok(EtGrid { spec: grid.spec, date: grid.date, unit: target, values })
}

pub fn days_in_month(year: i32, month: u32) -> usize {
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    let next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    }
    .expect("valid month");
    (next - first).num_days() as usize
}

/// Cell-wise sum of daily mm·day⁻¹ grids from one calendar month. The
/// result is dated the first of the month. A NaN on any day makes that cell
/// NaN. Input order does not matter.
pub fn monthly_aggregate(grids: &[EtGrid], require_complete: bool) -> Result<EtGrid, GridError> {
    let first = grids.first().ok_or(GridError::NoGrids)?;
    let mut by_date: BTreeMap<NaiveDate, &EtGrid> = BTreeMap::new();
    for g in grids {
        if g.spec != first.spec {
            return Err(GridError::MixedSpecs);
        }
        if (g.date.year(), g.date.month()) != (first.date.year(), first.date.month()) {
            return Err(GridError::MixedMonths(first.date, g.date));
        }
        if g.unit != EtUnit::MmPerDay {
            return Err(GridError::WrongUnit(g.date, g.unit));
        }
        if g.values.len() != g.spec.n_cells() {
            return Err(GridError::Shape { expected: g.spec.n_cells(), found: g.values.len() });
        }
        if by_date.insert(g.date, g).is_some() {
            return Err(GridError::DuplicateDate(g.date));
        }
    }
    let (year, month) = (first.date.year(), first.date.month());
    let expected = days_in_month(year, month);
    if require_complete && by_date.len() != expected {
        return Err(GridError::IncompleteMonth { year, month, found: by_date.len(), expected });
    }
    // summing in date order makes the result independent of input order
    let mut sums = alloc::vec![0.0f64; first.values.len()];
    for g in by_date.values() {
        for (s, &v) in sums.iter_mut().zip(&g.values) {
            *s += f64::from(v);
        }
    }
    Ok(EtGrid {
        spec: first.spec,
        date: NaiveDate::from_ymd_opt(year, month, 1).expect("valid month"),
        unit: EtUnit::MmPerMonth,
        values: sums.into_iter().map(|s| s as f32).collect(),
    })
}

/// Feature provider backed by per-cell tables keyed by [`cell_id`].
#[derive(Debug, Clone)]
pub struct CellTableProvider {
    pub spec: GridSpec,
    schema: FeatureSchema,
    sites: BTreeMap<String, SiteMeta>,
    windows: BTreeMap<(String, NaiveDate), MeteoWindow>,
    reflectance: ReflectanceIndex,
}

impl CellTableProvider {
    pub fn new(
        spec: GridSpec,
        sites: Vec<SiteMeta>,
        windows: Vec<MeteoWindow>,
        reflectance: ReflectanceIndex,
    ) -> CellTableProvider {
        CellTableProvider {
            spec,
            schema: FeatureSchema::standard(),
            sites: sites.into_iter().map(|s| (s.site_id.clone(), s)).collect(),
            windows: windows.into_iter().map(|w| ((w.site_id.clone(), w.date), w)).collect(),
            reflectance,
        }
    }

    /// Dates that have at least one meteorology window.
    pub fn dates(&self) -> Vec<NaiveDate> {
        let mut d: Vec<NaiveDate> = self.windows.keys().map(|(_, d)| *d).collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

impl FeatureProvider for CellTableProvider {
    fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    fn features(&self, lat: f64, lon: f64, date: NaiveDate) -> Option<FeatureVector> {
        let (r, c) = self.spec.cell_of(lat, lon)?;
        let id = cell_id(r, c);
        let site = self.sites.get(&id)?;
        let key = (id, date);
        let window = self.windows.get(&key)?;
        let doy = date.ordinal() as u16;
        let geo = GeoTime { lat: site.lat, lon: site.lon, doy };
        assemble_features(window, self.reflectance.get(&key), geo, site.igbp, doy, &self.schema).ok()
    }
}
