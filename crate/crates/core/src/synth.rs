//! Deterministic synthetic flux-tower datasets.
//!
//! Meteorology is a seasonal sinusoid per variable with per-site offsets and
//! daily noise. The target is the Penman-Monteith reference ET of the
//! observation day (clamped at zero, converted to W·m⁻²), scaled by a fixed
//! biome factor, plus Gaussian noise. Reflectance greenness follows the same
//! seasonal cycle.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Datelike, Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{
    filter_qc, join_dataset, DatasetError, DatasetTable, FluxObservation, JoinReport, ReflectanceIndex, SiteMeta,
    DEFAULT_QC_MIN,
};
use crate::features::{FeatureSchema, Igbp, MeteoWindow, ReflectanceSample, Variable, WINDOW_DAYS};
use crate::grid::{cell_id, GridSpec};
use crate::physics::{daily_reference_et, et_depth_to_le, extraterrestrial_radiation, solar_declination, GeoTime, MeteoDay};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Multiplier applied to reference ET per land-cover class.
pub const BIOME_FACTORS: [(Igbp, f64); 7] = [
    (Igbp::CRO, 1.10),
    (Igbp::DBF, 0.95),
    (Igbp::ENF, 0.75),
    (Igbp::GRA, 0.80),
    (Igbp::MF, 0.85),
    (Igbp::WET, 1.05),
    (Igbp::OSH, 0.60),
];

pub fn biome_factor(igbp: Igbp) -> f64 {
    BIOME_FACTORS.iter().find(|(b, _)| *b == igbp).map_or(0.9, |(_, f)| *f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_sites: usize,
    pub years: usize,
    pub start_year: i32,
    /// Target noise standard deviation, W·m⁻².
    pub sigma: f64,
    pub seed: u64,
    /// Share of flux rows given a quality fraction below the default cut.
    pub low_qc_fraction: f64,
    /// Share of site-days without a reflectance sample.
    pub missing_reflectance_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_sites: 10,
            years: 2,
            start_year: 2019,
            sigma: 5.0,
            seed: 0,
            low_qc_fraction: 0.05,
            missing_reflectance_fraction: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Config(m.into()));
        if self.n_sites < 2 {
            return bad("n_sites must be at least 2");
        }
        if self.years < 1 {
            return bad("years must be at least 1");
        }
        if !(1900..=2200).contains(&self.start_year) {
            return bad("start_year must lie in 1900..=2200");
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return bad("sigma must be finite and non-negative");
        }
        for f in [self.low_qc_fraction, self.missing_reflectance_fraction] {
            if !(0.0..=1.0).contains(&f) {
                return bad("fractions must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

/// The four ingestion tables of a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSources {
    pub sites: Vec<SiteMeta>,
    pub flux: Vec<FluxObservation>,
    pub windows: Vec<MeteoWindow>,
    pub reflectance: ReflectanceIndex,
}

/// What generated the target, for reports and tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub description: String,
    pub sigma: f64,
    pub biome_factors: Vec<(Igbp, f64)>,
    pub n_site_years: usize,
}

/// Per-site climate parameters.
struct Climate {
    t_mean: f64,
    t_amp: f64,
    dew_dep: f64,
    wind: f64,
    wind_dir: f64,
    sp: f64,
    wet: f64,
}

fn gauss(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sd).expect("finite sd").sample(rng)
}

fn seasonal(doy: u32) -> f64 {
    libm::sin(2.0 * core::f64::consts::PI * (f64::from(doy) - 105.0) / 365.25)
}

fn meteo_day(rng: &mut ChaCha8Rng, c: &Climate, lat: f64, date: NaiveDate) -> MeteoDay {
    let doy = date.ordinal();
    let s = seasonal(doy);
    let t2m = c.t_mean + c.t_amp * s + gauss(rng, 2.5);
    let d2m = t2m - c.dew_dep * (0.6 + 0.8 * rng.random::<f64>());
    let speed = (c.wind * (0.5 + rng.random::<f64>())).max(0.1);
    let dir = c.wind_dir + gauss(rng, 0.8);
    let ra = extraterrestrial_radiation(GeoTime { lat, lon: 0.0, doy: doy as u16 }).unwrap_or(1.0);
    let clearness = 0.3 + 0.7 * rng.random::<f64>();
    let ssr = 0.77 * (0.25 + 0.5 * clearness) * ra;
    let tp = if rng.random::<f64>() < c.wet * (1.0 - 0.5 * clearness) {
        Exp::new(1.0 / 6.0).expect("positive rate").sample(rng)
    } else {
        0.0
    };
    let evap = (0.2 + 2.0 * c.wet * (0.5 + 0.5 * s) + gauss(rng, 0.3)).max(0.0);
    MeteoDay {
        t2m,
        d2m,
        u10: speed * libm::cos(dir),
        v10: speed * libm::sin(dir),
        sp: c.sp + gauss(rng, 0.4),
        ssr,
        evap,
        tp,
    }
}

fn reflectance(rng: &mut ChaCha8Rng, igbp: Igbp, lat: f64, date: NaiveDate) -> ReflectanceSample {
    let doy = date.ordinal();
    let shift = match igbp {
        Igbp::ENF => 0.3,
        Igbp::OSH => -0.25,
        Igbp::WET => 0.1,
        _ => 0.0,
    };
    let g = (0.5 + 0.45 * seasonal(doy) + shift + gauss(rng, 0.05)).clamp(0.0, 1.0);
    let n = |rng: &mut ChaCha8Rng| gauss(rng, 0.005);
    let nir = 0.22 + 0.26 * g + n(rng);
    let bands = [
        0.09 - 0.06 * g + n(rng),
        nir,
        0.05 - 0.02 * g + n(rng),
        0.08 + 0.02 * g + n(rng),
        0.95 * nir + n(rng),
        0.27 - 0.06 * g + n(rng),
        0.18 - 0.08 * g + n(rng),
    ];
    let decl = solar_declination(doy as u16).to_degrees();
    let solar_zenith = ((lat - decl).abs() + 5.0 + 10.0 * rng.random::<f64>()).min(89.0);
    let state_qa = {
        let u = rng.random::<f64>();
        let cloud: u16 = if u < 0.1 {
            1
        } else if u < 0.15 {
            2
        } else if u < 0.18 {
            4
        } else {
            0
        };
        cloud | (rng.random::<u16>() & 0xFFF8 & 0x0F00)
    };
    ReflectanceSample {
        bands,
        sensor_zenith: 60.0 * rng.random::<f64>(),
        sensor_azimuth: -180.0 + 360.0 * rng.random::<f64>(),
        solar_zenith,
        solar_azimuth: 130.0 + 40.0 * rng.random::<f64>(),
        state_qa,
    }
}

fn climate(rng: &mut ChaCha8Rng, lat: f64) -> Climate {
    Climate {
        t_mean: 22.0 - 0.45 * (lat - 36.0) + gauss(rng, 1.5),
        t_amp: 10.0 + 6.0 * rng.random::<f64>(),
        dew_dep: 2.0 + 8.0 * rng.random::<f64>(),
        wind: 1.5 + 3.0 * rng.random::<f64>(),
        wind_dir: core::f64::consts::TAU * rng.random::<f64>(),
        sp: 101.0 - 12.0 * rng.random::<f64>(),
        wet: 0.2 + 0.5 * rng.random::<f64>(),
    }
}

/// Builds 30-day windows ending on every day of `days[WINDOW_DAYS - 1..]`.
fn windows_for(site_id: &str, start: NaiveDate, days: &[MeteoDay]) -> Vec<MeteoWindow> {
    (WINDOW_DAYS - 1..days.len())
        .map(|end| {
            let mut series = [[0.0; WINDOW_DAYS]; 8];
            for (lag, d) in days[end + 1 - WINDOW_DAYS..=end].iter().enumerate() {
                let vals = [d.t2m, d.d2m, d.u10, d.v10, d.sp, d.ssr, d.evap, d.tp];
                for var in Variable::ALL {
                    series[var.index()][lag] = vals[var.index()];
                }
            }
            MeteoWindow { site_id: site_id.into(), date: start + Days::new(end as u64), series }
        })
        .collect()
}

/// Clamped reference ET of the observation day in W·m⁻².
pub fn pm_target(window: &MeteoWindow, lat: f64, lon: f64) -> f64 {
    let doy = window.date.ordinal() as u16;
    let et0 = daily_reference_et(&window.day(WINDOW_DAYS - 1), GeoTime { lat, lon, doy }).unwrap_or(0.0);
    et_depth_to_le(et0.max(0.0)).unwrap_or(0.0)
}

/// Raw ingestion tables. Each site draws from its own RNG stream, so a
/// site's data does not depend on how many sites are generated.
pub fn synth_sources(cfg: &SynthConfig) -> Result<SynthSources, SynthError> {
    cfg.validate()?;
    let first = NaiveDate::from_ymd_opt(cfg.start_year, 1, 1).expect("validated year");
    let last = NaiveDate::from_ymd_opt(cfg.start_year + cfg.years as i32 - 1, 12, 31).expect("validated year");
    let start = first - Days::new(WINDOW_DAYS as u64 - 1);
    let n_days = (last - start).num_days() as usize + 1;

    let mut out = SynthSources { sites: Vec::new(), flux: Vec::new(), windows: Vec::new(), reflectance: ReflectanceIndex::new() };
    for i in 0..cfg.n_sites {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let site = SiteMeta {
            site_id: format!("SY-{i:03}"),
            lat: 36.5 + 12.0 * rng.random::<f64>(),
            lon: -103.5 + 21.0 * rng.random::<f64>(),
            igbp: BIOME_FACTORS[i % BIOME_FACTORS.len()].0,
        };
        let c = climate(&mut rng, site.lat);
        let days: Vec<MeteoDay> = (0..n_days).map(|d| meteo_day(&mut rng, &c, site.lat, start + Days::new(d as u64))).collect();
        let windows = windows_for(&site.site_id, start, &days);
        let factor = biome_factor(site.igbp);
        for w in &windows {
            let le = pm_target(w, site.lat, site.lon) * factor + gauss(&mut rng, cfg.sigma);
            let qc = if rng.random::<f64>() < cfg.low_qc_fraction {
                0.3 + 0.44 * rng.random::<f64>()
            } else {
                0.75 + 0.25 * rng.random::<f64>()
            };
            out.flux.push(FluxObservation { site_id: site.site_id.clone(), date: w.date, le, qc });
            if rng.random::<f64>() >= cfg.missing_reflectance_fraction {
                let r = reflectance(&mut rng, site.igbp, site.lat, w.date);
                out.reflectance.insert((site.site_id.clone(), w.date), r);
            }
        }
        out.windows.extend(windows);
        out.sites.push(site);
    }
    Ok(out)
}

pub fn ground_truth(cfg: &SynthConfig) -> GroundTruth {
    GroundTruth {
        description: format!(
            "LE = max(0, PM ET0 of observation day) * 2.45 / 0.0864 * biome factor + N(0, {}^2) W m-2; \
             {} sites x {} years from {}, seed {}",
            cfg.sigma, cfg.n_sites, cfg.years, cfg.start_year, cfg.seed
        ),
        sigma: cfg.sigma,
        biome_factors: BIOME_FACTORS.to_vec(),
        n_site_years: cfg.n_sites * cfg.years,
    }
}

/// QC-filtered, joined training table plus the generating model.
pub fn synth_dataset(cfg: &SynthConfig) -> Result<(DatasetTable, GroundTruth, JoinReport), SynthError> {
    let src = synth_sources(cfg)?;
    let flux = filter_qc(src.flux, DEFAULT_QC_MIN);
    let (table, report) = join_dataset(&src.sites, &flux, &src.windows, &src.reflectance, &FeatureSchema::standard())?;
    Ok((table, ground_truth(cfg), report))
}

/// Gridded inputs for every cell of `spec` over `dates`, keyed by
/// [`cell_id`]. Cells are assigned land-cover classes in a fixed rotation.
pub fn synth_grid_inputs(
    spec: &GridSpec,
    dates: &[NaiveDate],
    seed: u64,
) -> Result<(Vec<SiteMeta>, Vec<MeteoWindow>, ReflectanceIndex), SynthError> {
    spec.validate().map_err(|e| SynthError::Config(format!("{e}")))?;
    let (Some(&lo), Some(&hi)) = (dates.iter().min(), dates.iter().max()) else {
        return Ok((Vec::new(), Vec::new(), ReflectanceIndex::new()));
    };
    let start = lo - Days::new(WINDOW_DAYS as u64 - 1);
    let n_days = (hi - start).num_days() as usize + 1;
    let (mut sites, mut windows, mut refl) = (Vec::new(), Vec::new(), ReflectanceIndex::new());
    for r in 0..spec.n_rows() {
        for c in 0..spec.n_cols() {
            let idx = r * spec.n_cols() + c;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let (lat, lon) = spec.cell_center(r, c);
            let site = SiteMeta { site_id: cell_id(r, c), lat, lon, igbp: BIOME_FACTORS[idx % BIOME_FACTORS.len()].0 };
            let clim = climate(&mut rng, lat.clamp(36.0, 49.0));
            let days: Vec<MeteoDay> = (0..n_days).map(|d| meteo_day(&mut rng, &clim, lat, start + Days::new(d as u64))).collect();
            for w in windows_for(&site.site_id, start, &days) {
                if dates.contains(&w.date) {
                    refl.insert((site.site_id.clone(), w.date), reflectance(&mut rng, site.igbp, lat, w.date));
                    windows.push(w);
                }
            }
            sites.push(site);
        }
    }
    Ok((sites, windows, refl))
}
