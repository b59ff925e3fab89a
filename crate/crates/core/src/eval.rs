//! Error metrics, site-year grouped k-fold cross-validation and grid search.
//!
//! Cross-validated figures are reported as the unweighted mean over folds
//! with the standard error across folds (sample standard deviation over
//! √folds). Month and IGBP strata are scored inside each fold's validation
//! set and then averaged the same way; a stratum absent from a fold's
//! validation set simply does not contribute for that fold.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetTable;
use crate::features::Igbp;
use crate::gbdt::{fit_matrix, ColumnMatrix, GbdtError, TrainConfig};
use crate::par;
use crate::physics::W_M2_TO_MM_DAY;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("prediction and target lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("metrics need at least one value")]
    Empty,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid k = {k} for {groups} groups (need 2 <= k <= groups)")]
    InvalidK { k: usize, groups: usize },
    #[error("empty hyperparameter grid")]
    EmptyGrid,
    #[error(transparent)]
    Train(#[from] GbdtError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    /// NaN when the targets have zero variance.
    pub r2: f64,
}

/// MAE, RMSE and the residual-form coefficient of determination.
pub fn metrics(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    if let Some(i) = (0..y_true.len()).find(|&i| !y_true[i].is_finite() || !y_pred[i].is_finite()) {
        return Err(EvalError::NonFinite(i));
    }
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let (mut abs, mut sq, mut tot) = (0.0, 0.0, 0.0);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let e = p - t;
        abs += e.abs();
        sq += e * e;
        tot += (t - mean) * (t - mean);
    }
    let rmse = libm::sqrt(sq / n);
    Ok(Metrics {
        mae: abs / n,
        // power-mean inequality; guards against last-ulp rounding
        rmse: rmse.max(abs / n),
        r2: if tot > 0.0 { 1.0 - sq / tot } else { f64::NAN },
    })
}

/// Group → fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, group: &str) -> Option<usize> {
        self.assignment.get(group).copied()
    }

    pub fn groups_in(&self, fold: usize) -> impl Iterator<Item = &str> {
        self.assignment.iter().filter(move |(_, &f)| f == fold).map(|(g, _)| g.as_str())
    }
}

/// Size-balanced grouped k-fold.
///
/// Distinct groups are ordered by descending row count (ties by key) and
/// each is placed in the fold with the fewest rows so far (ties by lowest
/// fold index).
pub fn group_kfold<S: AsRef<str>>(groups: &[S], k: usize) -> Result<FoldPlan, EvalError> {
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for g in groups {
        *sizes.entry(g.as_ref()).or_default() += 1;
    }
    if k < 2 || k > sizes.len() {
        return Err(EvalError::InvalidK { k, groups: sizes.len() });
    }
    let mut ordered: Vec<(&str, usize)> = sizes.into_iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut load = alloc::vec![0usize; k];
    let mut assignment = BTreeMap::new();
    for (g, n) in ordered {
        let fold = (0..k).min_by_key(|&f| (load[f], f)).expect("k >= 2");
        load[fold] += n;
        assignment.insert(String::from(g), fold);
    }
    Ok(FoldPlan { k, assignment })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    /// Sample std across folds / √n; 0 with fewer than two folds.
    pub se: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> MeanSe {
        let n = values.len();
        if n == 0 {
            return MeanSe { mean: f64::NAN, se: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            libm::sqrt(var) / libm::sqrt(n as f64)
        };
        MeanSe { mean, se }
    }

    /// Scaled companion, e.g. W·m⁻² → mm·day⁻¹.
    pub fn scaled(self, factor: f64) -> MeanSe {
        MeanSe { mean: self.mean * factor, se: self.se * factor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub metrics: Metrics,
    pub month_rmse: BTreeMap<u8, f64>,
    pub igbp_rmse: BTreeMap<Igbp, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary<K> {
    pub key: K,
    /// W·m⁻².
    pub rmse: MeanSe,
    pub rmse_mm_day: MeanSe,
    /// Folds whose validation set contained this stratum.
    pub n_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mae: MeanSe,
    pub rmse: MeanSe,
    pub r2: MeanSe,
    pub mae_mm_day: MeanSe,
    pub rmse_mm_day: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub folds: Vec<FoldResult>,
    pub aggregate: Aggregate,
    pub by_month: Vec<StratumSummary<u8>>,
    pub by_igbp: Vec<StratumSummary<Igbp>>,
}

fn stratum_rmse<K: Ord + Copy>(keys: &[K], y: &[f64], pred: &[f64]) -> BTreeMap<K, f64> {
    let mut acc: BTreeMap<K, (f64, usize)> = BTreeMap::new();
    for ((k, t), p) in keys.iter().zip(y).zip(pred) {
        let e = acc.entry(*k).or_default();
        e.0 += (p - t) * (p - t);
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, libm::sqrt(s / n as f64))).collect()
}

fn summarize<K: Ord + Copy>(per_fold: impl Iterator<Item = BTreeMap<K, f64>>) -> Vec<StratumSummary<K>> {
    let mut by_key: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for m in per_fold {
        for (k, v) in m {
            by_key.entry(k).or_default().push(v);
        }
    }
    by_key
        .into_iter()
        .map(|(key, vals)| {
            let rmse = MeanSe::of(&vals);
            StratumSummary { key, rmse, rmse_mm_day: rmse.scaled(W_M2_TO_MM_DAY), n_folds: vals.len() }
        })
        .collect()
}

/// Trains on k−1 folds and scores the held-out fold, for every fold.
/// Folds are trained concurrently under `std`; the report is identical
/// for any thread count.
pub fn cross_validate(table: &DatasetTable, config: &TrainConfig, k: usize) -> Result<EvalReport, EvalError> {
    config.validate()?;
    let groups = table.groups();
    let plan = group_kfold(&groups, k)?;
    let fold_of: Vec<usize> = groups.iter().map(|g| plan.fold_of(g).expect("every group assigned")).collect();

    let results: Vec<Result<FoldResult, EvalError>> = par::map_indexed(k, |fold| {
        let (valid, train): (Vec<usize>, Vec<usize>) = (0..table.len()).partition(|&i| fold_of[i] == fold);
        let x = ColumnMatrix::from_table(table, Some(&train))?;
        let y: Vec<f64> = train.iter().map(|&i| table.rows[i].target).collect();
        let (model, _) = fit_matrix(&x, &y, &table.schema, config)?;
        let y_valid: Vec<f64> = valid.iter().map(|&i| table.rows[i].target).collect();
        let pred: Vec<f64> = valid.iter().map(|&i| model.predict_row(&table.rows[i].features.values)).collect();
        let months: Vec<u8> = valid.iter().map(|&i| table.rows[i].month).collect();
        let biomes: Vec<Igbp> = valid.iter().map(|&i| table.rows[i].igbp).collect();
        Ok(FoldResult {
            fold,
            n_train: train.len(),
            n_valid: valid.len(),
            metrics: metrics(&y_valid, &pred)?,
            month_rmse: stratum_rmse(&months, &y_valid, &pred),
            igbp_rmse: stratum_rmse(&biomes, &y_valid, &pred),
        })
    });
    let folds = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let pick = |f: fn(&Metrics) -> f64| MeanSe::of(&folds.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
    let mae = pick(|m| m.mae);
    let rmse = pick(|m| m.rmse);
    let aggregate = Aggregate {
        mae,
        rmse,
        r2: pick(|m| m.r2),
        mae_mm_day: mae.scaled(W_M2_TO_MM_DAY),
        rmse_mm_day: rmse.scaled(W_M2_TO_MM_DAY),
    };
    let by_month = summarize(folds.iter().map(|f| f.month_rmse.clone()));
    let by_igbp = summarize(folds.iter().map(|f| f.igbp_rmse.clone()));
    Ok(EvalReport { k, folds, aggregate, by_month, by_igbp })
}

/// Lists of candidate values per hyperparameter. `None` keeps the base
/// config's value; `Some(vec![])` makes the grid empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigGrid {
    pub n_estimators: Option<Vec<usize>>,
    pub learning_rate: Option<Vec<f64>>,
    pub num_leaves: Option<Vec<usize>>,
    pub max_depth: Option<Vec<usize>>,
    pub min_child_weight: Option<Vec<u32>>,
    pub min_gain: Option<Vec<f64>>,
    pub colsample: Option<Vec<f64>>,
    pub subsample: Option<Vec<f64>>,
}

impl ConfigGrid {
    /// Cartesian product in field order, last field varying fastest.
    pub fn expand(&self, base: &TrainConfig) -> Vec<TrainConfig> {
        fn axis<T: Clone>(
            points: Vec<TrainConfig>,
            values: &Option<Vec<T>>,
            set: impl Fn(&mut TrainConfig, T),
        ) -> Vec<TrainConfig> {
            let Some(values) = values else { return points };
            let mut out = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for v in values {
                    let mut c = p.clone();
                    set(&mut c, v.clone());
                    out.push(c);
                }
            }
            out
        }
        let mut pts = alloc::vec![base.clone()];
        pts = axis(pts, &self.n_estimators, |c, v| c.n_estimators = v);
        pts = axis(pts, &self.learning_rate, |c, v| c.learning_rate = v);
        pts = axis(pts, &self.num_leaves, |c, v| c.num_leaves = v);
        pts = axis(pts, &self.max_depth, |c, v| c.max_depth = v);
        pts = axis(pts, &self.min_child_weight, |c, v| c.min_child_weight = v);
        pts = axis(pts, &self.min_gain, |c, v| c.min_gain = v);
        pts = axis(pts, &self.colsample, |c, v| c.colsample = v);
        pts = axis(pts, &self.subsample, |c, v| c.subsample = v);
        pts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub config: TrainConfig,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: TrainConfig,
    pub best_index: usize,
    pub points: Vec<GridPoint>,
}

/// Cross-validates every config; the winner has the lowest mean RMSE, with
/// ties going to the earliest point.
pub fn grid_search(table: &DatasetTable, configs: &[TrainConfig], k: usize) -> Result<GridSearchResult, EvalError> {
    if configs.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let mut points = Vec::with_capacity(configs.len());
    let mut best_index = 0;
    for (i, cfg) in configs.iter().enumerate() {
        let report = cross_validate(table, cfg, k)?;
        if i > 0 && report.aggregate.rmse.mean < points_rmse(&points, best_index) {
            best_index = i;
        }
        points.push(GridPoint { config: cfg.clone(), aggregate: report.aggregate });
    }
    Ok(GridSearchResult { best: configs[best_index].clone(), best_index, points })
}

fn points_rmse(points: &[GridPoint], i: usize) -> f64 {
    points[i].aggregate.rmse.mean
}

/// Human-readable one-liner, e.g. for logs.
pub fn describe(report: &EvalReport) -> String {
    let a = &report.aggregate;
    format!(
        "k={} R²={:.3}±{:.3} RMSE={:.2}±{:.2} W·m⁻² ({:.3} mm·day⁻¹) MAE={:.2}±{:.2} W·m⁻² ({:.3} mm·day⁻¹)",
        report.k, a.r2.mean, a.r2.se, a.rmse.mean, a.rmse.se, a.rmse_mm_day.mean, a.mae.mean, a.mae.se,
        a.mae_mm_day.mean
    )
}
