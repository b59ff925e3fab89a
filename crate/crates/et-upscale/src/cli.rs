//! The `et-upscale` command line.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error, 3 I/O
//! error (including malformed input or model files), 4 empty joined
//! dataset, 5 invalid fold count.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use clap::{Parser, Subcommand};
use et_upscale_core::dataset::{join_dataset, DatasetTable};
use et_upscale_core::eval::{cross_validate, describe, grid_search, EvalError};
use et_upscale_core::features::FeatureSchema;
use et_upscale_core::gbdt::{feature_importance_gain, fit_with_log, GbdtError};
use et_upscale_core::grid::{convert_units, monthly_aggregate, predict_grid, CellTableProvider, EtUnit, GridError};
use et_upscale_core::physics::W_M2_TO_MM_DAY;
use et_upscale_core::synth::{synth_grid_inputs, synth_sources};

use crate::config::{ConfigError, RunConfig};
use crate::etgrid::{daily_file_name, grid_to_csv, monthly_file_name, read_grid, write_grid, GridIoError};
use crate::ingest::{
    load_flux, load_meteo_windows, load_reflectance, load_sites, write_file, write_flux, write_meteo_windows,
    write_reflectance, write_sites, IngestError,
};
use crate::model::{load_model, save_model, save_schema, schema_sidecar_path, ModelError};
use crate::report::{grid_search_csv, importance_csv, write_eval_report};

#[derive(Debug, Parser)]
#[command(name = "et-upscale", version, about = "Knowledge-guided evapotranspiration upscaling")]
pub struct Cli {
    /// Run configuration (JSON). Relative paths inside resolve against its directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config value by dotted key, e.g. `--set train.learning_rate=0.05`.
    /// `--train.learning_rate 0.05` is accepted as a shorthand.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true, env = "ET_UPSCALE_THREADS")]
    pub threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as the four ingestion CSVs.
    Synth {
        /// Output directory; defaults to the configured data paths.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model and write it with its schema sidecar.
    Train {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Grouped k-fold cross-validation report.
    Cv {
        #[arg(short, long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive search over the `search` section of the config.
    GridSearch {
        #[arg(short, long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Daily ET rasters for the configured grid and dates.
    PredictGrid {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write monthly sums (mm month-1).
        #[arg(long)]
        monthly: bool,
        /// Also write a CSV next to every raster.
        #[arg(long)]
        csv: bool,
    },
    /// Gain importance table.
    Importance {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 15)]
        top: usize,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert an ETGRID file between W m-2 and mm day-1, or export it as CSV.
    Convert {
        input: PathBuf,
        #[arg(long)]
        to: Option<EtUnit>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    EmptyData(String),
    #[error("{0}")]
    InvalidK(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::EmptyData(_) => 4,
            CliError::InvalidK(_) => 5,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } => CliError::Io(e.to_string()),
            ConfigError::Invalid(_) => CliError::Config(e.to_string()),
        }
    }
}

macro_rules! io_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Io(e.to_string())
            }
        }
    )*};
}
io_error!(IngestError, ModelError, GridIoError, std::io::Error);

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidK { .. } => CliError::InvalidK(e.to_string()),
            EvalError::EmptyGrid => CliError::Config(e.to_string()),
            EvalError::Train(g) => g.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<GbdtError> for CliError {
    fn from(e: GbdtError) -> Self {
        match e {
            GbdtError::EmptyTable => CliError::EmptyData(e.to_string()),
            GbdtError::Config(_) => CliError::Config(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::Other(e.to_string())
    }
}

/// Rewrites `--a.b=v` and `--a.b v` into `--set a.b=v`.
fn expand_dotted_flags(args: Vec<OsString>) -> Vec<OsString> {
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.into_iter().peekable();
    if let Some(bin) = it.next() {
        out.push(bin);
    }
    while let Some(a) = it.next() {
        let Some(flag) = a.to_str().and_then(|s| s.strip_prefix("--")).filter(|f| {
            let name = f.split('=').next().unwrap_or("");
            name.contains('.') && !name.starts_with('.')
        }) else {
            out.push(a);
            continue;
        };
        let flag = flag.to_string();
        let pair = if flag.contains('=') {
            flag
        } else {
            match it.next() {
                Some(v) => format!("{flag}={}", v.to_string_lossy()),
                None => flag,
            }
        };
        out.push("--set".into());
        out.push(pair.into());
    }
    out
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = expand_dotted_flags(args.into_iter().map(Into::into).collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_env("RUST_LOG").try_init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if let Command::Convert { input, to, output, csv } = &cli.command {
        return cmd_convert(input, *to, output.as_deref(), csv.as_deref());
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    match &cli.command {
        Command::Synth { out } => cmd_synth(&cfg, out.as_deref()),
        Command::Train { model } => cmd_train(&cfg, model.as_deref()),
        Command::Cv { k, out } => cmd_cv(&cfg, k.unwrap_or(cfg.eval.k), out.as_deref()),
        Command::GridSearch { k, out } => cmd_grid_search(&cfg, k.unwrap_or(cfg.eval.k), out.as_deref()),
        Command::PredictGrid { model, out, monthly, csv } => {
            cmd_predict_grid(&cfg, model.as_deref(), out.as_deref(), *monthly, *csv)
        }
        Command::Importance { model, top, out } => cmd_importance(&cfg, model.as_deref(), *top, out.as_deref()),
        Command::Convert { .. } => unreachable!("handled above"),
    }
}

fn cmd_synth(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let d = &cfg.data;
    let at = |name: &str, configured: &Path| out.map_or_else(|| configured.to_path_buf(), |o| o.join(name));
    let src = synth_sources(&cfg.synth).map_err(|e| CliError::Config(e.to_string()))?;
    write_sites(&at("sites.csv", &d.sites), &src.sites)?;
    write_flux(&at("flux.csv", &d.flux), &src.flux)?;
    write_meteo_windows(&at("meteo.csv", &d.meteo), &src.windows)?;
    write_reflectance(&at("reflectance.csv", &d.reflectance), &src.reflectance)?;
    let mut written = 4;
    if !cfg.grid.dates.is_empty() {
        let (sites, windows, refl) =
            synth_grid_inputs(&cfg.grid.spec, &cfg.grid.dates, cfg.synth.seed).map_err(|e| CliError::Config(e.to_string()))?;
        write_sites(&at("grid_sites.csv", &d.grid_sites), &sites)?;
        write_meteo_windows(&at("grid_meteo.csv", &d.grid_meteo), &windows)?;
        write_reflectance(&at("grid_reflectance.csv", &d.grid_reflectance), &refl)?;
        written += 3;
    }
    println!(
        "wrote {written} files: {} sites, {} flux rows, {} windows, {} reflectance samples",
        src.sites.len(),
        src.flux.len(),
        src.windows.len(),
        src.reflectance.len()
    );
    Ok(())
}

/// Loads and joins the ingestion files; an empty join is an error.
pub fn load_table(cfg: &RunConfig) -> Result<DatasetTable, CliError> {
    let d = &cfg.data;
    let sites = load_sites(&d.sites)?;
    let flux = load_flux(&d.flux, d.qc_min)?;
    let windows = load_meteo_windows(&d.meteo)?;
    let refl = load_reflectance(&d.reflectance)?;
    let (table, report) = join_dataset(&sites, &flux, &windows, &refl, &FeatureSchema::standard())
        .map_err(|e| CliError::Other(e.to_string()))?;
    log::info!(
        "joined {} rows; dropped {} without window, {} without site; {} without reflectance",
        report.joined,
        report.missing_window,
        report.missing_site,
        report.missing_reflectance
    );
    if report.dropped() > 0 {
        eprintln!("warning: dropped {} flux rows without matching meteorology or site", report.dropped());
    }
    if table.is_empty() {
        return Err(CliError::EmptyData("joined dataset is empty".into()));
    }
    Ok(table)
}

fn cmd_train(cfg: &RunConfig, model_path: Option<&Path>) -> Result<(), CliError> {
    let table = load_table(cfg)?;
    let (model, log) = fit_with_log(&table, &cfg.train)?;
    for w in &log.warnings {
        eprintln!("warning: {w}");
    }
    let path = model_path.unwrap_or(&cfg.data.model);
    save_model(&model, path)?;
    save_schema(&model.schema, &schema_sidecar_path(path))?;
    let rmse = match log.train_rmse.last() {
        Some(&r) => r,
        None => {
            let pred: Vec<f64> = table.rows.iter().map(|r| model.predict_row(&r.features.values)).collect();
            et_upscale_core::eval::metrics(&table.targets(), &pred).map_err(|e| CliError::Other(e.to_string()))?.rmse
        }
    };
    println!(
        "trained {} trees on {} rows; training RMSE {rmse:.4} W m-2 ({:.4} mm day-1); model {}",
        model.trees.len(),
        table.len(),
        rmse * W_M2_TO_MM_DAY,
        path.display()
    );
    Ok(())
}

fn cmd_cv(cfg: &RunConfig, k: usize, out: Option<&Path>) -> Result<(), CliError> {
    let table = load_table(cfg)?;
    let report = cross_validate(&table, &cfg.train, k)?;
    let dir = out.unwrap_or(&cfg.data.out_dir);
    let files = write_eval_report(&report, dir, "cv")?;
    println!("{}", describe(&report));
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_grid_search(cfg: &RunConfig, k: usize, out: Option<&Path>) -> Result<(), CliError> {
    let table = load_table(cfg)?;
    let points = cfg.search.expand(&cfg.train);
    let result = grid_search(&table, &points, k)?;
    let dir = out.unwrap_or(&cfg.data.out_dir);
    write_file(&dir.join("grid_search.json"), serde_json::to_string_pretty(&result).expect("serializes").as_bytes())?;
    write_file(&dir.join("grid_search.csv"), grid_search_csv(&result).as_bytes())?;
    write_file(&dir.join("best_train.json"), serde_json::to_string_pretty(&result.best).expect("serializes").as_bytes())?;
    let best = &result.points[result.best_index].aggregate;
    println!(
        "{} points; best #{} RMSE {:.4} ± {:.4} W m-2, R² {:.4}",
        result.points.len(),
        result.best_index,
        best.rmse.mean,
        best.rmse.se,
        best.r2.mean
    );
    Ok(())
}

fn cmd_predict_grid(
    cfg: &RunConfig,
    model_path: Option<&Path>,
    out: Option<&Path>,
    monthly: bool,
    csv: bool,
) -> Result<(), CliError> {
    let model = load_model(model_path.unwrap_or(&cfg.data.model))?;
    let d = &cfg.data;
    let provider = CellTableProvider::new(
        cfg.grid.spec,
        load_sites(&d.grid_sites)?,
        load_meteo_windows(&d.grid_meteo)?,
        load_reflectance(&d.grid_reflectance)?,
    );
    let dates = if cfg.grid.dates.is_empty() { provider.dates() } else { cfg.grid.dates.clone() };
    if dates.is_empty() {
        return Err(CliError::EmptyData("no dates to predict".into()));
    }
    let dir = out.unwrap_or(&cfg.data.out_dir);
    let mut months: BTreeMap<(i32, u32), Vec<_>> = BTreeMap::new();
    for &date in &dates {
        let grid = predict_grid(&model, &provider, &cfg.grid.spec, date)?;
        let path = dir.join(daily_file_name(date));
        write_grid(&grid, &path)?;
        if csv {
            grid_to_csv(&grid, &path.with_extension("csv"))?;
        }
        log::info!("wrote {}", path.display());
        if monthly {
            months.entry((date.year(), date.month())).or_default().push(convert_units(&grid, EtUnit::MmPerDay)?);
        }
    }
    let mut n_monthly = 0;
    for ((y, m), grids) in months {
        match monthly_aggregate(&grids, cfg.grid.require_complete) {
            Ok(sum) => {
                let path = dir.join(monthly_file_name(NaiveDate::from_ymd_opt(y, m, 1).expect("valid month")));
                write_grid(&sum, &path)?;
                if csv {
                    grid_to_csv(&sum, &path.with_extension("csv"))?;
                }
                n_monthly += 1;
            }
            Err(e @ GridError::IncompleteMonth { .. }) => eprintln!("warning: skipping monthly sum: {e}"),
            Err(e) => return Err(e.into()),
        }
    }
    println!("wrote {} daily and {n_monthly} monthly grids to {}", dates.len(), dir.display());
    Ok(())
}

fn cmd_importance(cfg: &RunConfig, model_path: Option<&Path>, top: usize, out: Option<&Path>) -> Result<(), CliError> {
    let model = load_model(model_path.unwrap_or(&cfg.data.model))?;
    let report = feature_importance_gain(&model);
    let text = importance_csv(report.top(top));
    match out {
        Some(p) => write_file(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_convert(input: &Path, to: Option<EtUnit>, output: Option<&Path>, csv: Option<&Path>) -> Result<(), CliError> {
    if output.is_none() && csv.is_none() {
        return Err(CliError::Config("convert needs --output and/or --csv".into()));
    }
    let grid = read_grid(input)?;
    let grid = match to {
        Some(unit) => convert_units(&grid, unit).map_err(|e| CliError::Config(e.to_string()))?,
        None => grid,
    };
    if let Some(p) = output {
        write_grid(&grid, p)?;
    }
    if let Some(p) = csv {
        grid_to_csv(&grid, p)?;
    }
    Ok(())
}
