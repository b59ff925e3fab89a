//! Per-site-day feature engineering.
//!
//! A [`FeatureVector`] is assembled from three families of inputs:
//!
//! * weather: six summary statistics of each 30-day ERA5-Land series,
//! * remote sensing: MOD09GA reflectance bands, view/sun angles, a cloud
//!   flag decoded from `state_1km`, and five vegetation indices,
//! * knowledge-guided: the same six statistics over a 30-day series of daily
//!   Penman-Monteith reference ET.
//!
//! Site metadata (lat, lon, day of year, IGBP class code) closes the vector.
//! Slot order is fixed by [`FeatureSchema::standard`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::physics::{self, GeoTime, MeteoDay, PhysicsError};

/// Days in a meteorology window; the last entry is the observation day.
pub const WINDOW_DAYS: usize = 30;
const ROLL_SHORT: usize = 7;

/// Version tag of the standard layout. Bumped whenever slot order or any
/// statistic definition changes.
pub const SCHEMA_VERSION: &str = "et-features/1";

/// Denominators smaller than this make a vegetation index undefined.
const VI_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("daily reference ET failed at lag {lag}: {source}")]
    Physics { lag: usize, source: PhysicsError },
    #[error("feature schema mismatch: expected {expected:?}, found {found:?}")]
    SchemaVersion { expected: String, found: String },
    #[error("invalid reflectance sample: {0}")]
    InvalidReflectance(&'static str),
    #[error("unknown IGBP class {0:?}")]
    UnknownIgbp(String),
}

/// ERA5-Land variables in window order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    T2m,
    D2m,
    U10,
    V10,
    Sp,
    Ssr,
    Evap,
    Tp,
}

impl Variable {
    pub const ALL: [Variable; 8] = [
        Variable::T2m,
        Variable::D2m,
        Variable::U10,
        Variable::V10,
        Variable::Sp,
        Variable::Ssr,
        Variable::Evap,
        Variable::Tp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::T2m => "t2m",
            Variable::D2m => "d2m",
            Variable::U10 => "u10",
            Variable::V10 => "v10",
            Variable::Sp => "sp",
            Variable::Ssr => "ssr",
            Variable::Evap => "evap",
            Variable::Tp => "tp",
        }
    }

    /// Accumulated quantities get rolling sums instead of rolling means.
    pub fn kind(self) -> SeriesKind {
        match self {
            Variable::Ssr | Variable::Evap | Variable::Tp => SeriesKind::Cumulative,
            _ => SeriesKind::Instantaneous,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Variable {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variable::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| FeatureError::InvalidSeries(format!("unknown variable {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Instantaneous,
    Cumulative,
}

/// 30 days of meteorology for one site-day, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeteoWindow {
    pub site_id: String,
    /// Observation day (the last entry of every series).
    pub date: NaiveDate,
    /// Indexed by [`Variable::index`].
    pub series: [[f64; WINDOW_DAYS]; 8],
}

impl MeteoWindow {
    pub fn series(&self, var: Variable) -> &[f64; WINDOW_DAYS] {
        &self.series[var.index()]
    }

    /// Meteorology of one lag (0 = oldest, 29 = observation day).
    pub fn day(&self, lag: usize) -> MeteoDay {
        let v = |var: Variable| self.series[var.index()][lag];
        MeteoDay {
            t2m: v(Variable::T2m),
            d2m: v(Variable::D2m),
            u10: v(Variable::U10),
            v10: v(Variable::V10),
            sp: v(Variable::Sp),
            ssr: v(Variable::Ssr),
            evap: v(Variable::Evap),
            tp: v(Variable::Tp),
        }
    }

    /// Calendar date of a lag.
    pub fn lag_date(&self, lag: usize) -> NaiveDate {
        self.date - Days::new((WINDOW_DAYS - 1 - lag) as u64)
    }
}

/// Summary of one 30-day series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub last: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
    /// Mean or sum over all 30 days.
    pub roll30: f64,
    /// Mean or sum over the trailing 7 days.
    pub roll7: f64,
}

impl SeriesStats {
    pub const NAMES: [&'static str; 6] = ["last", "min", "max", "std", "roll30", "roll7"];

    pub fn to_array(&self) -> [f64; 6] {
        [self.last, self.min, self.max, self.std, self.roll30, self.roll7]
    }
}

/// Mean computed relative to the first element so that a constant slice
/// yields its value exactly; clamped into the slice's range.
fn anchored_mean(xs: &[f64], lo: f64, hi: f64) -> f64 {
    let anchor = xs[0];
    let shift: f64 = xs.iter().map(|x| x - anchor).sum::<f64>() / xs.len() as f64;
    (anchor + shift).clamp(lo, hi)
}

/// Last/min/max/population-std plus 30- and 7-day rolling aggregates.
pub fn series_stats(series: &[f64], kind: SeriesKind) -> Result<SeriesStats, FeatureError> {
    if series.len() != WINDOW_DAYS {
        return Err(FeatureError::InvalidSeries(format!(
            "expected {WINDOW_DAYS} values, got {}",
            series.len()
        )));
    }
    if let Some(i) = series.iter().position(|x| !x.is_finite()) {
        return Err(FeatureError::InvalidSeries(format!("non-finite value at lag {i}")));
    }
    let (min, max) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let mean30 = anchored_mean(series, min, max);
    let tail = &series[WINDOW_DAYS - ROLL_SHORT..];
    let (tmin, tmax) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let mean7 = anchored_mean(tail, tmin, tmax);
    let var = series.iter().map(|x| (x - mean30) * (x - mean30)).sum::<f64>() / WINDOW_DAYS as f64;
    let (roll30, roll7) = match kind {
        SeriesKind::Instantaneous => (mean30, mean7),
        SeriesKind::Cumulative => (mean30 * WINDOW_DAYS as f64, mean7 * ROLL_SHORT as f64),
    };
    Ok(SeriesStats {
        last: series[WINDOW_DAYS - 1],
        min,
        max,
        std: libm::sqrt(var),
        roll30,
        roll7,
    })
}

/// Band positions within a MOD09GA sample.
pub mod band {
    pub const RED: usize = 0;
    pub const NIR1: usize = 1;
    pub const BLUE: usize = 2;
    pub const GREEN: usize = 3;
    pub const NIR2: usize = 4;
    pub const SWIR1: usize = 5;
    pub const SWIR2: usize = 6;
    pub const NAMES: [&str; 7] = ["red", "nir1", "blue", "green", "nir2", "swir1", "swir2"];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectanceSample {
    /// Red, NIR1, Blue, Green, NIR2, SWIR1, SWIR2.
    pub bands: [f64; 7],
    pub sensor_zenith: f64,
    pub sensor_azimuth: f64,
    pub solar_zenith: f64,
    pub solar_azimuth: f64,
    pub state_qa: u16,
}

impl ReflectanceSample {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.bands.iter().any(|b| !b.is_finite()) {
            return Err(FeatureError::InvalidReflectance("band values must be finite"));
        }
        let zenith_ok = |z: f64| (0.0..=180.0).contains(&z);
        let azimuth_ok = |a: f64| (-180.0..=180.0).contains(&a);
        if !zenith_ok(self.sensor_zenith) || !zenith_ok(self.solar_zenith) {
            return Err(FeatureError::InvalidReflectance("zenith angles must be in [0, 180]"));
        }
        if !azimuth_ok(self.sensor_azimuth) || !azimuth_ok(self.solar_azimuth) {
            return Err(FeatureError::InvalidReflectance("azimuth angles must be in [-180, 180]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VegetationIndices {
    pub ndvi: f64,
    pub evi: f64,
    pub gndvi: f64,
    pub savi: f64,
    pub arvi: f64,
}

impl VegetationIndices {
    pub const NAMES: [&'static str; 5] = ["ndvi", "evi", "gndvi", "savi", "arvi"];

    pub fn to_array(&self) -> [f64; 5] {
        [self.ndvi, self.evi, self.gndvi, self.savi, self.arvi]
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den.abs() < VI_EPS {
        f64::NAN
    } else {
        num / den
    }
}

/// NDVI, EVI, GNDVI, SAVI and ARVI from NIR1/Red/Blue/Green.
///
/// EVI carries no 2.5 gain factor and ARVI uses `NIR − 2·Red + Blue` over
/// `NIR + 2·Red − Blue`; both are the forms this pipeline was trained on,
/// not the textbook ones. An index whose denominator is within 1e-9 of
/// zero is NaN.
pub fn vegetation_indices(bands: &[f64; 7]) -> VegetationIndices {
    let nir = bands[band::NIR1];
    let red = bands[band::RED];
    let blue = bands[band::BLUE];
    let green = bands[band::GREEN];
    VegetationIndices {
        ndvi: ratio(nir - red, nir + red),
        evi: ratio(nir - red, nir + 6.0 * red - 7.5 * blue + 1.0),
        gndvi: ratio(nir - green, nir + green),
        savi: {
            let den = nir + red + 0.5;
            if den.abs() < VI_EPS {
                f64::NAN
            } else {
                1.5 * (nir - red) / den
            }
        },
        arvi: ratio(nir - 2.0 * red + blue, nir + 2.0 * red - blue),
    }
}

/// 1 when MOD09GA `state_1km` reports cloud (bits 0-1 not clear) or cloud
/// shadow (bit 2); higher bits are ignored.
pub fn decode_cloud_qa(state_qa: u16) -> u8 {
    let cloud_state = state_qa & 0b11;
    let shadow = (state_qa >> 2) & 1;
    u8::from(cloud_state != 0 || shadow == 1)
}

/// IGBP land-cover class with its integer feature code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Igbp {
    CRO,
    DBF,
    ENF,
    GRA,
    MF,
    WET,
    OSH,
    CSH,
    SAV,
    WSA,
    EBF,
    DNF,
    URB,
    BSV,
    CVM,
    SNO,
    WAT,
}

impl Igbp {
    pub const ALL: [Igbp; 17] = [
        Igbp::CRO,
        Igbp::DBF,
        Igbp::ENF,
        Igbp::GRA,
        Igbp::MF,
        Igbp::WET,
        Igbp::OSH,
        Igbp::CSH,
        Igbp::SAV,
        Igbp::WSA,
        Igbp::EBF,
        Igbp::DNF,
        Igbp::URB,
        Igbp::BSV,
        Igbp::CVM,
        Igbp::SNO,
        Igbp::WAT,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Igbp> {
        Igbp::ALL.get(usize::from(code)).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Igbp::CRO => "CRO",
            Igbp::DBF => "DBF",
            Igbp::ENF => "ENF",
            Igbp::GRA => "GRA",
            Igbp::MF => "MF",
            Igbp::WET => "WET",
            Igbp::OSH => "OSH",
            Igbp::CSH => "CSH",
            Igbp::SAV => "SAV",
            Igbp::WSA => "WSA",
            Igbp::EBF => "EBF",
            Igbp::DNF => "DNF",
            Igbp::URB => "URB",
            Igbp::BSV => "BSV",
            Igbp::CVM => "CVM",
            Igbp::SNO => "SNO",
            Igbp::WAT => "WAT",
        }
    }
}

impl fmt::Display for Igbp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Igbp {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Igbp::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| FeatureError::UnknownIgbp(s.to_string()))
    }
}

/// Daily Penman-Monteith ET₀ over a window, clamped at zero, summarized
/// with rolling means.
pub fn pm_feature_series(window: &MeteoWindow, geo: GeoTime) -> Result<SeriesStats, FeatureError> {
    let daily = pm_daily_series(window, geo)?;
    series_stats(&daily, SeriesKind::Instantaneous)
}

/// The clamped daily ET₀ values behind [`pm_feature_series`], oldest first.
pub fn pm_daily_series(window: &MeteoWindow, geo: GeoTime) -> Result<[f64; WINDOW_DAYS], FeatureError> {
    let mut out = [0.0; WINDOW_DAYS];
    for (lag, slot) in out.iter_mut().enumerate() {
        let day_geo = GeoTime { doy: window.lag_date(lag).ordinal() as u16, ..geo };
        let et0 = physics::daily_reference_et(&window.day(lag), day_geo)
            .map_err(|source| FeatureError::Physics { lag, source })?;
        *slot = et0.max(0.0);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Weather,
    Reflectance,
    Vi,
    Geometry,
    Kgml,
    Meta,
}

impl FeatureGroup {
    fn tag(self) -> &'static str {
        match self {
            FeatureGroup::Weather => "weather",
            FeatureGroup::Reflectance => "reflectance",
            FeatureGroup::Vi => "vi",
            FeatureGroup::Geometry => "geometry",
            FeatureGroup::Kgml => "kgml",
            FeatureGroup::Meta => "meta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSlot {
    pub name: String,
    pub group: FeatureGroup,
}

/// Ordered, named predictor layout. Serialized next to every model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: String,
    pub slots: Vec<FeatureSlot>,
}

/// Slot offsets of the standard layout.
pub mod layout {
    pub const WEATHER: usize = 0;
    pub const BANDS: usize = 48;
    pub const ANGLES: usize = 55;
    pub const CLOUD: usize = 59;
    pub const VI: usize = 60;
    pub const KGML: usize = 65;
    pub const LAT: usize = 71;
    pub const LON: usize = 72;
    pub const DOY: usize = 73;
    pub const IGBP: usize = 74;
    pub const LEN: usize = 75;
}

impl FeatureSchema {
    /// The 75-slot layout produced by [`assemble_features`].
    pub fn standard() -> FeatureSchema {
        let mut slots = Vec::with_capacity(layout::LEN);
        let mut push = |name: String, group| slots.push(FeatureSlot { name, group });
        for var in Variable::ALL {
            for stat in SeriesStats::NAMES {
                push(format!("{}_{stat}", var.name()), FeatureGroup::Weather);
            }
        }
        for (i, b) in band::NAMES.iter().enumerate() {
            push(format!("b{}_{b}", i + 1), FeatureGroup::Reflectance);
        }
        for a in ["sensor_zenith", "sensor_azimuth", "solar_zenith", "solar_azimuth"] {
            push(a.to_string(), FeatureGroup::Geometry);
        }
        push("cloud_flag".to_string(), FeatureGroup::Reflectance);
        for vi in VegetationIndices::NAMES {
            push(vi.to_string(), FeatureGroup::Vi);
        }
        for stat in SeriesStats::NAMES {
            push(format!("pm_et0_{stat}"), FeatureGroup::Kgml);
        }
        for m in ["lat", "lon", "doy", "igbp"] {
            push(m.to_string(), FeatureGroup::Meta);
        }
        FeatureSchema { version: SCHEMA_VERSION.to_string(), slots }
    }

    /// Generic numbered layout for matrices that did not come from
    /// [`assemble_features`].
    pub fn anonymous(n: usize) -> FeatureSchema {
        FeatureSchema {
            version: "anonymous".to_string(),
            slots: (0..n)
                .map(|i| FeatureSlot { name: format!("f{i}"), group: FeatureGroup::Meta })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().map(|s| s.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.name == name)
    }

    /// Checks that slot names are unique.
    pub fn validate(&self) -> Result<(), FeatureError> {
        for (i, s) in self.slots.iter().enumerate() {
            if self.slots[..i].iter().any(|o| o.name == s.name) {
                return Err(FeatureError::InvalidSeries(format!("duplicate slot name {:?}", s.name)));
            }
        }
        Ok(())
    }

    /// 64-bit FNV-1a over version, names and groups.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
            h ^= 0xff;
            h = h.wrapping_mul(PRIME);
        };
        eat(self.version.as_bytes());
        for s in &self.slots {
            eat(s.name.as_bytes());
            eat(s.group.tag().as_bytes());
        }
        h
    }
}

/// Dense predictor vector; NaN marks a missing entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// [`FeatureSchema::fingerprint`] of the layout the values follow.
    pub schema: u64,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, schema: &FeatureSchema) -> FeatureVector {
        FeatureVector { values, schema: schema.fingerprint() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Builds the standard feature vector for one site-day.
///
/// A missing reflectance sample yields NaN for the bands, angles, cloud
/// flag and vegetation indices.
pub fn assemble_features(
    window: &MeteoWindow,
    refl: Option<&ReflectanceSample>,
    geo: GeoTime,
    igbp: Igbp,
    doy: u16,
    schema: &FeatureSchema,
) -> Result<FeatureVector, FeatureError> {
    let standard = FeatureSchema::standard();
    if schema.fingerprint() != standard.fingerprint() {
        return Err(FeatureError::SchemaVersion {
            expected: standard.version,
            found: schema.version.clone(),
        });
    }
    let mut values = Vec::with_capacity(layout::LEN);
    for var in Variable::ALL {
        values.extend(series_stats(window.series(var), var.kind())?.to_array());
    }
    match refl {
        Some(r) => {
            r.validate()?;
            values.extend(r.bands);
            values.extend([r.sensor_zenith, r.sensor_azimuth, r.solar_zenith, r.solar_azimuth]);
            values.push(f64::from(decode_cloud_qa(r.state_qa)));
            values.extend(vegetation_indices(&r.bands).to_array());
        }
        None => values.extend([f64::NAN; 7 + 4 + 1 + 5]),
    }
    values.extend(pm_feature_series(window, geo)?.to_array());
    values.extend([geo.lat, geo.lon, f64::from(doy), f64::from(igbp.code())]);
    debug_assert_eq!(values.len(), layout::LEN);
    Ok(FeatureVector { values, schema: standard.fingerprint() })
}
