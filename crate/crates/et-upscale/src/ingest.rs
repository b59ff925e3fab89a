//! CSV readers and writers for the four ingestion tables.
//!
//! All files are UTF-8 with a mandatory header row, `.` as the decimal
//! separator and ISO-8601 dates. Floats are written in shortest
//! round-trip form, so writing and re-reading reproduces every value.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use et_upscale_core::dataset::{FluxObservation, ReflectanceIndex, SiteMeta};
use et_upscale_core::features::{band, Igbp, MeteoWindow, ReflectanceSample, Variable, WINDOW_DAYS};

pub const SITES_HEADER: [&str; 4] = ["site_id", "lat", "lon", "igbp"];
pub const FLUX_HEADER: [&str; 4] = ["site_id", "date", "le_f_mds", "le_f_mds_qc"];
pub const REFLECTANCE_ANGLES: [&str; 4] = ["sensor_zenith", "sensor_azimuth", "solar_zenith", "solar_azimuth"];

/// Plausible surface reflectance range; values outside are kept with a warning.
pub const BAND_RANGE: (f64, f64) = (-0.1, 1.6);

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: bad header: expected {expected:?}, found {found:?}")]
    Header { path: PathBuf, expected: Vec<String>, found: Vec<String> },
    #[error("{path}:{line}: {message}")]
    Row { path: PathBuf, line: u64, message: String },
    #[error("{path}: duplicate site id {id:?}")]
    DuplicateSite { path: PathBuf, id: String },
    #[error("{path}: duplicate {what} for {site_id} on {date}")]
    DuplicateRow { path: PathBuf, what: &'static str, site_id: String, date: NaiveDate },
    #[error("{path}: incomplete window for {site_id} on {date}: missing {}", missing.join(", "))]
    IncompleteWindow { path: PathBuf, site_id: String, date: NaiveDate, missing: Vec<String> },
}

impl IngestError {
    fn io(path: &Path, source: io::Error) -> IngestError {
        IngestError::Io { path: path.to_path_buf(), source }
    }
}

pub fn meteo_header() -> Vec<String> {
    let mut h: Vec<String> = ["site_id", "date", "variable"].map(String::from).to_vec();
    h.extend((0..WINDOW_DAYS).map(|i| format!("lag{i:02}")));
    h
}

pub fn reflectance_header() -> Vec<String> {
    let mut h: Vec<String> = vec!["site_id".into(), "date".into()];
    h.extend(band::NAMES.iter().enumerate().map(|(i, b)| format!("b{}_{b}", i + 1)));
    h.extend(REFLECTANCE_ANGLES.map(String::from));
    h.push("state_qa".into());
    h
}

/// Rows of a CSV file, with 1-based line numbers. An empty file has no rows.
struct Table {
    path: PathBuf,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn open(path: &Path, expected: &[String]) -> Result<Table, IngestError> {
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| IngestError::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut records = rdr.records();
        let Some(header) = records.next() else {
            return Ok(Table { path: path.into(), rows: Vec::new() });
        };
        let header = header.map_err(|e| csv_error(path, &e))?;
        let found: Vec<String> = header.iter().map(String::from).collect();
        if found != expected {
            return Err(IngestError::Header { path: path.into(), expected: expected.to_vec(), found });
        }
        let mut rows = Vec::new();
        for rec in records {
            let rec = rec.map_err(|e| csv_error(path, &e))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != expected.len() {
                return Err(IngestError::Row {
                    path: path.into(),
                    line,
                    message: format!("expected {} fields, found {}", expected.len(), rec.len()),
                });
            }
            rows.push((line, rec));
        }
        Ok(Table { path: path.into(), rows })
    }

    fn err(&self, line: u64, message: impl Into<String>) -> IngestError {
        IngestError::Row { path: self.path.clone(), line, message: message.into() }
    }

    fn parse<T: FromStr>(&self, line: u64, rec: &csv::StringRecord, i: usize, what: &str) -> Result<T, IngestError> {
        rec[i].parse().map_err(|_| self.err(line, format!("cannot parse {what} {:?}", &rec[i])))
    }

    fn date(&self, line: u64, rec: &csv::StringRecord, i: usize) -> Result<NaiveDate, IngestError> {
        NaiveDate::parse_from_str(&rec[i], "%Y-%m-%d")
            .map_err(|_| self.err(line, format!("cannot parse date {:?}", &rec[i])))
    }

    fn finite(&self, line: u64, rec: &csv::StringRecord, i: usize, what: &str) -> Result<f64, IngestError> {
        let v: f64 = self.parse(line, rec, i, what)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(line, format!("{what} must be finite")))
        }
    }
}

fn csv_error(path: &Path, e: &csv::Error) -> IngestError {
    let line = e.position().map_or(0, |p| p.line());
    IngestError::Row { path: path.into(), line, message: e.to_string() }
}

fn strings(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

/// Site metadata; duplicate ids are rejected.
pub fn load_sites(path: &Path) -> Result<Vec<SiteMeta>, IngestError> {
    let t = Table::open(path, &strings(&SITES_HEADER))?;
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let site_id = rec[0].to_string();
        if site_id.is_empty() {
            return Err(t.err(*line, "empty site_id"));
        }
        if !seen.insert(site_id.clone()) {
            return Err(IngestError::DuplicateSite { path: path.into(), id: site_id });
        }
        let lat = t.finite(*line, rec, 1, "lat")?;
        let lon = t.finite(*line, rec, 2, "lon")?;
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(t.err(*line, "lat/lon out of range"));
        }
        let igbp: Igbp = rec[3].parse().map_err(|e| t.err(*line, format!("{e}")))?;
        out.push(SiteMeta { site_id, lat, lon, igbp });
    }
    Ok(out)
}

/// Flux targets with `qc >= qc_min`.
pub fn load_flux(path: &Path, qc_min: f64) -> Result<Vec<FluxObservation>, IngestError> {
    let t = Table::open(path, &strings(&FLUX_HEADER))?;
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let date = t.date(*line, rec, 1)?;
        let le = t.finite(*line, rec, 2, "le_f_mds")?;
        let qc = t.finite(*line, rec, 3, "le_f_mds_qc")?;
        if !(0.0..=1.0).contains(&qc) {
            return Err(t.err(*line, format!("le_f_mds_qc {qc} outside [0, 1]")));
        }
        if qc >= qc_min {
            out.push(FluxObservation { site_id: rec[0].to_string(), date, le, qc });
        }
    }
    Ok(out)
}

/// Meteorology windows from the wide format, one row per (site, date,
/// variable). Every site-date must carry all eight variables.
pub fn load_meteo_windows(path: &Path) -> Result<Vec<MeteoWindow>, IngestError> {
    let t = Table::open(path, &meteo_header())?;
    let mut partial: BTreeMap<(String, NaiveDate), [Option<[f64; WINDOW_DAYS]>; 8]> = BTreeMap::new();
    for (line, rec) in &t.rows {
        let site_id = rec[0].to_string();
        let date = t.date(*line, rec, 1)?;
        let var: Variable = rec[2].parse().map_err(|e| t.err(*line, format!("{e}")))?;
        let mut series = [0.0; WINDOW_DAYS];
        for (lag, v) in series.iter_mut().enumerate() {
            *v = t.finite(*line, rec, 3 + lag, "lag value")?;
        }
        let slot = &mut partial.entry((site_id.clone(), date)).or_default()[var.index()];
        if slot.is_some() {
            return Err(IngestError::DuplicateRow { path: path.into(), what: var.name(), site_id, date });
        }
        *slot = Some(series);
    }
    partial
        .into_iter()
        .map(|((site_id, date), vars)| {
            let missing: Vec<String> = Variable::ALL
                .into_iter()
                .filter(|v| vars[v.index()].is_none())
                .map(|v| v.name().to_string())
                .collect();
            if !missing.is_empty() {
                return Err(IngestError::IncompleteWindow { path: path.into(), site_id, date, missing });
            }
            let series = vars.map(|s| s.expect("checked complete"));
            Ok(MeteoWindow { site_id, date, series })
        })
        .collect()
}

/// Reflectance keyed by (site, date). Out-of-range bands are logged and kept.
pub fn load_reflectance(path: &Path) -> Result<ReflectanceIndex, IngestError> {
    let t = Table::open(path, &reflectance_header())?;
    let mut out = ReflectanceIndex::new();
    for (line, rec) in &t.rows {
        let site_id = rec[0].to_string();
        let date = t.date(*line, rec, 1)?;
        let mut bands = [0.0; 7];
        for (i, b) in bands.iter_mut().enumerate() {
            *b = t.finite(*line, rec, 2 + i, band::NAMES[i])?;
            if !(BAND_RANGE.0..=BAND_RANGE.1).contains(b) {
                log::warn!("{}:{line}: suspicious {} reflectance {b}", path.display(), band::NAMES[i]);
            }
        }
        let angle = |i: usize| t.finite(*line, rec, 9 + i, REFLECTANCE_ANGLES[i]);
        let state_qa: u16 = t.parse(*line, rec, 13, "state_qa (integer)")?;
        let sample = ReflectanceSample {
            bands,
            sensor_zenith: angle(0)?,
            sensor_azimuth: angle(1)?,
            solar_zenith: angle(2)?,
            solar_azimuth: angle(3)?,
            state_qa,
        };
        sample.validate().map_err(|e| t.err(*line, format!("{e}")))?;
        if out.insert((site_id.clone(), date), sample).is_some() {
            return Err(IngestError::DuplicateRow { path: path.into(), what: "reflectance", site_id, date });
        }
    }
    Ok(out)
}

fn writer(path: &Path) -> Result<csv::Writer<File>, IngestError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| IngestError::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| IngestError::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn csv_io(path: &Path, e: csv::Error) -> IngestError {
    IngestError::io(path, io::Error::other(e.to_string()))
}

fn write_rows<I, R>(path: &Path, header: &[String], rows: I) -> Result<(), IngestError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_io(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| IngestError::io(path, e))
}

pub fn write_sites(path: &Path, sites: &[SiteMeta]) -> Result<(), IngestError> {
    let rows = sites.iter().map(|s| [s.site_id.clone(), s.lat.to_string(), s.lon.to_string(), s.igbp.to_string()]);
    write_rows(path, &strings(&SITES_HEADER), rows)
}

pub fn write_flux(path: &Path, flux: &[FluxObservation]) -> Result<(), IngestError> {
    let rows = flux.iter().map(|f| [f.site_id.clone(), f.date.to_string(), f.le.to_string(), f.qc.to_string()]);
    write_rows(path, &strings(&FLUX_HEADER), rows)
}

pub fn write_meteo_windows(path: &Path, windows: &[MeteoWindow]) -> Result<(), IngestError> {
    let rows = windows.iter().flat_map(|w| {
        Variable::ALL.into_iter().map(move |var| {
            let mut r = vec![w.site_id.clone(), w.date.to_string(), var.name().to_string()];
            r.extend(w.series(var).iter().map(|v| v.to_string()));
            r
        })
    });
    write_rows(path, &meteo_header(), rows)
}

pub fn write_reflectance(path: &Path, refl: &ReflectanceIndex) -> Result<(), IngestError> {
    let rows = refl.iter().map(|((site, date), r)| {
        let mut row = vec![site.clone(), date.to_string()];
        row.extend(r.bands.iter().map(|v| v.to_string()));
        row.extend([r.sensor_zenith, r.sensor_azimuth, r.solar_zenith, r.solar_azimuth].map(|v| v.to_string()));
        row.push(r.state_qa.to_string());
        row
    });
    write_rows(path, &reflectance_header(), rows)
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = File::create(path)?;
    f.write_all(bytes)?;
    f.flush()
}
