//! Run configuration: one JSON document per experiment.
//!
//! Relative paths resolve against the config file's directory (or the
//! working directory when no file is given). Any value can be overridden
//! with a dotted key, e.g. `train.learning_rate=0.05`; the override is
//! applied to the JSON tree before it is checked, so unknown keys fail the
//! same way in files and on the command line.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use et_upscale_core::eval::ConfigGrid;
use et_upscale_core::gbdt::TrainConfig;
use et_upscale_core::grid::GridSpec;
use et_upscale_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataPaths {
    pub sites: PathBuf,
    pub flux: PathBuf,
    pub meteo: PathBuf,
    pub reflectance: PathBuf,
    pub grid_sites: PathBuf,
    pub grid_meteo: PathBuf,
    pub grid_reflectance: PathBuf,
    pub model: PathBuf,
    pub out_dir: PathBuf,
    /// Minimum gap-fill quality fraction for flux rows.
    pub qc_min: f64,
}

impl Default for DataPaths {
    fn default() -> Self {
        DataPaths {
            sites: "data/sites.csv".into(),
            flux: "data/flux.csv".into(),
            meteo: "data/meteo.csv".into(),
            reflectance: "data/reflectance.csv".into(),
            grid_sites: "data/grid_sites.csv".into(),
            grid_meteo: "data/grid_meteo.csv".into(),
            grid_reflectance: "data/grid_reflectance.csv".into(),
            model: "out/model.json".into(),
            out_dir: "out".into(),
            qc_min: et_upscale_core::dataset::DEFAULT_QC_MIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub k: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub spec: GridSpec,
    /// Days to predict; empty means every day present in the gridded inputs.
    pub dates: Vec<NaiveDate>,
    /// Monthly sums only for months with every day present.
    pub require_complete: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { spec: GridSpec::default(), dates: Vec::new(), require_complete: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataPaths,
    pub train: TrainConfig,
    pub eval: EvalSection,
    pub grid: GridSection,
    pub search: ConfigGrid,
    pub synth: SynthConfig,
    /// When set, replaces both `train.seed` and `synth.seed`.
    pub seed: Option<u64>,
}

/// Parses `key.path=value`. The value is read as JSON when possible and as
/// a string otherwise, so `train.seed=7` and `data.flux=x.csv` both work.
pub fn parse_override(s: &str) -> Result<(Vec<String>, Value), ConfigError> {
    let (key, raw) = s.split_once('=').ok_or_else(|| ConfigError::Invalid(format!("override {s:?} lacks '='")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        return Err(ConfigError::Invalid(format!("bad override key {key:?}")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((path, value))
}

fn apply_override(root: &mut Value, path: &[String], value: Value) -> Result<(), ConfigError> {
    let mut cur = root;
    for (i, key) in path.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| ConfigError::Invalid(format!("override path {} crosses a non-object", path[..i].join("."))))?;
        if i + 1 == path.len() {
            obj.insert(key.clone(), value);
            return Ok(());
        }
        cur = obj.entry(key.clone()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("override path is non-empty")
}

impl RunConfig {
    /// Reads `path` (or defaults when `None`), applies overrides, checks
    /// keys and values, and resolves data paths.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
        let (mut tree, base) = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| ConfigError::Read { path: p.into(), source: e })?;
                let v: Value = serde_json::from_str(&text).map_err(|e| ConfigError::Invalid(format!("{}: {e}", p.display())))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (v, base)
            }
            None => (Value::Object(Default::default()), PathBuf::new()),
        };
        if !tree.is_object() {
            return Err(ConfigError::Invalid("top level must be a JSON object".into()));
        }
        for o in overrides {
            let (p, v) = parse_override(o)?;
            apply_override(&mut tree, &p, v)?;
        }
        let mut cfg: RunConfig = serde_json::from_value(tree).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(seed) = cfg.seed {
            cfg.train.seed = seed;
            cfg.synth.seed = seed;
        }
        cfg.validate()?;
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.train.validate().map_err(|e| inv(&e))?;
        self.grid.spec.validate().map_err(|e| inv(&e))?;
        self.synth.validate().map_err(|e| inv(&e))?;
        if !(0.0..=1.0).contains(&self.data.qc_min) {
            return Err(ConfigError::Invalid("data.qc_min must lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let d = &mut self.data;
        for p in [
            &mut d.sites,
            &mut d.flux,
            &mut d.meteo,
            &mut d.reflectance,
            &mut d.grid_sites,
            &mut d.grid_meteo,
            &mut d.grid_reflectance,
            &mut d.model,
            &mut d.out_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}
