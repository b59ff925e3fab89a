//! Training table assembly: QC filtering of flux targets and the join of
//! flux, meteorology windows, reflectance and site metadata into rows of
//! [`FeatureVector`]s.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::features::{
    assemble_features, FeatureError, FeatureSchema, FeatureVector, Igbp, MeteoWindow,
    ReflectanceSample,
};
use crate::physics::GeoTime;

/// Default minimum gap-fill quality: at most 25 % gap-filled half-hours.
pub const DEFAULT_QC_MIN: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("feature assembly failed for {site_id} on {date}: {source}")]
    Features { site_id: String, date: NaiveDate, source: FeatureError },
    #[error("duplicate site id {0:?}")]
    DuplicateSite(String),
    #[error("row length {found} does not match schema length {expected}")]
    RowLength { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteMeta {
    pub site_id: String,
    pub lat: f64,
    pub lon: f64,
    pub igbp: Igbp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxObservation {
    pub site_id: String,
    pub date: NaiveDate,
    /// Latent heat flux, W·m⁻².
    pub le: f64,
    /// Fraction of measured (not gap-filled) data, 0..=1.
    pub qc: f64,
}

/// Keeps rows with `qc >= qc_min`.
pub fn filter_qc(flux: Vec<FluxObservation>, qc_min: f64) -> Vec<FluxObservation> {
    flux.into_iter().filter(|f| f.qc >= qc_min).collect()
}

/// Site-year grouping key used by cross-validation.
pub fn group_key(site_id: &str, date: NaiveDate) -> String {
    format!("{site_id}:{}", date.year())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub site_id: String,
    pub date: NaiveDate,
    pub features: FeatureVector,
    /// LE target, W·m⁻².
    pub target: f64,
    /// `site_id:year`.
    pub group: String,
    pub month: u8,
    pub igbp: Igbp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetTable {
    pub schema: FeatureSchema,
    pub rows: Vec<DatasetRow>,
}

impl DatasetTable {
    pub fn new(schema: FeatureSchema) -> DatasetTable {
        DatasetTable { schema, rows: Vec::new() }
    }

    /// Builds a table from a plain matrix; site ids double as group keys.
    /// Mostly useful for tests and synthetic benchmarks.
    pub fn from_rows(
        schema: FeatureSchema,
        rows: Vec<(Vec<f64>, f64, String)>,
    ) -> Result<DatasetTable, DatasetError> {
        let fp = schema.fingerprint();
        let date = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let mut out = Vec::with_capacity(rows.len());
        for (values, target, group) in rows {
            if values.len() != schema.len() {
                return Err(DatasetError::RowLength { expected: schema.len(), found: values.len() });
            }
            out.push(DatasetRow {
                site_id: group.clone(),
                date,
                features: FeatureVector { values, schema: fp },
                target,
                group,
                month: 1,
                igbp: Igbp::CRO,
            });
        }
        Ok(DatasetTable { schema, rows: out })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.target).collect()
    }

    pub fn groups(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.group.as_str()).collect()
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, indices: &[usize]) -> DatasetTable {
        DatasetTable {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinReport {
    pub joined: usize,
    /// Flux rows with no meteorology window for their (site, date).
    pub missing_window: usize,
    /// Flux rows whose site is absent from the site table.
    pub missing_site: usize,
    /// Joined rows that had no reflectance sample.
    pub missing_reflectance: usize,
}

impl JoinReport {
    pub fn dropped(&self) -> usize {
        self.missing_window + self.missing_site
    }
}

pub type ReflectanceIndex = BTreeMap<(String, NaiveDate), ReflectanceSample>;

/// Inner join of flux with windows and sites, left join of reflectance.
/// Output rows follow the flux order.
pub fn join_dataset(
    sites: &[SiteMeta],
    flux: &[FluxObservation],
    windows: &[MeteoWindow],
    refl: &ReflectanceIndex,
    schema: &FeatureSchema,
) -> Result<(DatasetTable, JoinReport), DatasetError> {
    let mut site_index: BTreeMap<&str, &SiteMeta> = BTreeMap::new();
    for s in sites {
        if site_index.insert(s.site_id.as_str(), s).is_some() {
            return Err(DatasetError::DuplicateSite(s.site_id.clone()));
        }
    }
    let window_index: BTreeMap<(&str, NaiveDate), &MeteoWindow> =
        windows.iter().map(|w| ((w.site_id.as_str(), w.date), w)).collect();

    let mut report = JoinReport::default();
    let mut table = DatasetTable::new(schema.clone());
    for obs in flux {
        let Some(site) = site_index.get(obs.site_id.as_str()) else {
            report.missing_site += 1;
            continue;
        };
        let Some(window) = window_index.get(&(obs.site_id.as_str(), obs.date)) else {
            report.missing_window += 1;
            continue;
        };
        let sample = refl.get(&(obs.site_id.clone(), obs.date));
        if sample.is_none() {
            report.missing_reflectance += 1;
        }
        let doy = obs.date.ordinal() as u16;
        let geo = GeoTime { lat: site.lat, lon: site.lon, doy };
        let features = assemble_features(window, sample, geo, site.igbp, doy, schema).map_err(
            |source| DatasetError::Features { site_id: obs.site_id.clone(), date: obs.date, source },
        )?;
        table.rows.push(DatasetRow {
            site_id: obs.site_id.clone(),
            date: obs.date,
            features,
            target: obs.le,
            group: group_key(&obs.site_id, obs.date),
            month: obs.date.month() as u8,
            igbp: site.igbp,
        });
        report.joined += 1;
    }
    Ok((table, report))
}
