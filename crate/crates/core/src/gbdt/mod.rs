//! Histogram-based gradient-boosted regression trees.
//!
//! Squared-error loss only, so gradients are residuals and hessians are 1.
//! Two growth policies (leaf-wise and depth-wise), boosted and bagged
//! (random-forest style) ensembles, learned NaN default directions, and
//! per-tree column and row sampling driven by a seeded ChaCha stream per
//! tree. Training is deterministic for a given seed regardless of how many
//! worker threads build histograms.

mod bins;
mod split;
mod tree;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use bins::{build_bins, FeatureBins, MAX_BINS_LIMIT, NAN_BIN};
pub use split::{best_split, exact_best_split, BinStat, FeatureHistogram, SplitCandidate, SplitParams};
pub use tree::{grow_tree, BinnedMatrix, GrowParams, Growth, Node, Tree};

use crate::dataset::DatasetTable;
use crate::features::{FeatureSchema, FeatureVector};
use crate::par;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GbdtError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("cannot train on an empty table")]
    EmptyTable,
    #[error("feature vector does not match the model schema")]
    SchemaMismatch,
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Sequential residual fitting with shrinkage.
    Boosted,
    /// Independent trees on bootstrap resamples, averaged.
    Bagged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub mode: Mode,
    pub growth: Growth,
    pub n_estimators: usize,
    pub learning_rate: f64,
    /// Leaf cap per tree under leaf-wise growth.
    pub num_leaves: usize,
    /// 0 means unlimited.
    pub max_depth: usize,
    /// Minimum rows per child.
    pub min_child_weight: u32,
    /// Minimum split gain (XGBoost's `gamma`).
    pub min_gain: f64,
    /// Fraction of features drawn per tree.
    pub colsample: f64,
    /// Fraction of rows drawn per tree (bootstrap size in bagged mode).
    pub subsample: f64,
    pub max_bins: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Boosted,
            growth: Growth::Leafwise,
            n_estimators: 100,
            learning_rate: 0.1,
            num_leaves: 31,
            max_depth: 0,
            min_child_weight: 20,
            min_gain: 0.0,
            colsample: 1.0,
            subsample: 1.0,
            max_bins: 255,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Leaf-wise boosting: 80 leaves, learning rate 0.05, 70 % of features
    /// per tree.
    pub fn lightgbm() -> TrainConfig {
        TrainConfig { num_leaves: 80, learning_rate: 0.05, colsample: 0.7, ..TrainConfig::default() }
    }

    /// Depth-wise boosting: depth 14, learning rate 0.1, min child weight 5,
    /// gamma 0.6, 90 % of features and 80 % of rows per tree.
    pub fn xgboost() -> TrainConfig {
        TrainConfig {
            growth: Growth::Depthwise,
            learning_rate: 0.1,
            max_depth: 14,
            min_child_weight: 5,
            min_gain: 0.6,
            colsample: 0.9,
            subsample: 0.8,
            ..TrainConfig::default()
        }
    }

    /// Random forest: 100 bootstrap trees of depth ≤ 22.
    pub fn random_forest() -> TrainConfig {
        TrainConfig {
            mode: Mode::Bagged,
            growth: Growth::Depthwise,
            learning_rate: 1.0,
            max_depth: 22,
            min_child_weight: 1,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), GbdtError> {
        let frac = |x: f64| x > 0.0 && x <= 1.0;
        if !frac(self.learning_rate) {
            return Err(GbdtError::Config(format!("learning_rate {} not in (0, 1]", self.learning_rate)));
        }
        if !frac(self.colsample) {
            return Err(GbdtError::Config(format!("colsample {} not in (0, 1]", self.colsample)));
        }
        if !frac(self.subsample) {
            return Err(GbdtError::Config(format!("subsample {} not in (0, 1]", self.subsample)));
        }
        if !(2..=MAX_BINS_LIMIT).contains(&self.max_bins) {
            return Err(GbdtError::Config(format!("max_bins {} not in 2..={MAX_BINS_LIMIT}", self.max_bins)));
        }
        if self.num_leaves == 0 {
            return Err(GbdtError::Config("num_leaves must be at least 1".into()));
        }
        if !(self.min_gain >= 0.0) || !self.min_gain.is_finite() {
            return Err(GbdtError::Config(format!("min_gain {} must be finite and >= 0", self.min_gain)));
        }
        Ok(())
    }

    fn grow_params(&self) -> GrowParams {
        GrowParams {
            growth: self.growth,
            num_leaves: self.num_leaves,
            max_depth: self.max_depth,
            split: SplitParams { min_child_weight: self.min_child_weight, min_gain: self.min_gain },
            leaf_scale: match self.mode {
                Mode::Boosted => self.learning_rate,
                Mode::Bagged => 1.0,
            },
        }
    }
}

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMatrix {
    pub n_rows: usize,
    pub columns: Vec<Vec<f64>>,
}

impl ColumnMatrix {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>, n_cols: usize) -> Result<ColumnMatrix, GbdtError> {
        let mut columns = vec![Vec::new(); n_cols];
        let mut n_rows = 0;
        for row in rows {
            if row.len() != n_cols {
                return Err(GbdtError::Shape(format!("row {n_rows} has {} values, expected {n_cols}", row.len())));
            }
            for (c, &v) in columns.iter_mut().zip(row) {
                c.push(v);
            }
            n_rows += 1;
        }
        Ok(ColumnMatrix { n_rows, columns })
    }

    pub fn from_table(table: &DatasetTable, indices: Option<&[usize]>) -> Result<ColumnMatrix, GbdtError> {
        let n = table.schema.len();
        match indices {
            Some(idx) => ColumnMatrix::from_rows(idx.iter().map(|&i| table.rows[i].features.values.as_slice()), n),
            None => ColumnMatrix::from_rows(table.rows.iter().map(|r| r.features.values.as_slice()), n),
        }
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    fn binned(&self, max_bins: usize) -> BinnedMatrix {
        let bins: Vec<FeatureBins> = par::map_indexed(self.n_cols(), |f| build_bins(&self.columns[f], max_bins));
        let codes = par::map_indexed(self.n_cols(), |f| {
            self.columns[f].iter().map(|&v| bins[f].bin(v)).collect::<Vec<u8>>()
        });
        BinnedMatrix { n_rows: self.n_rows, bins, codes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    /// Mean of the training targets.
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub config: TrainConfig,
    pub schema: FeatureSchema,
}

impl Ensemble {
    /// Prediction for a raw row in schema order. NaN follows each split's
    /// default direction.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self.config.mode {
            Mode::Boosted => self.trees.iter().fold(self.base_score, |acc, t| acc + t.predict(row)),
            Mode::Bagged if self.trees.is_empty() => self.base_score,
            Mode::Bagged => {
                self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
            }
        }
    }

    /// Schema-checked prediction, W·m⁻² for models trained on LE.
    pub fn predict(&self, vector: &FeatureVector) -> Result<f64, GbdtError> {
        if vector.schema != self.schema.fingerprint() || vector.values.len() != self.schema.len() {
            return Err(GbdtError::SchemaMismatch);
        }
        Ok(self.predict_row(&vector.values))
    }

    pub fn total_gain(&self) -> f64 {
        self.trees.iter().flat_map(|t| t.splits()).map(|(_, g)| g).sum()
    }
}

/// Per-fit diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitLog {
    /// Training RMSE after each tree (boosted: cumulative model; bagged:
    /// running average).
    pub train_rmse: Vec<f64>,
    pub warnings: Vec<String>,
}

fn rmse(y: &[f64], pred: &[f64]) -> f64 {
    let sse: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    libm::sqrt(sse / y.len() as f64)
}

/// Random stream for tree `t`: independent of every other tree and of the
/// order trees are built in.
fn tree_rng(seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

fn draw_features(rng: &mut ChaCha8Rng, n: usize, frac: f64) -> Vec<usize> {
    if frac >= 1.0 {
        return (0..n).collect();
    }
    let k = (libm::round(frac * n as f64) as usize).clamp(1, n);
    let mut f = sample(rng, n, k).into_vec();
    f.sort_unstable();
    f
}

fn draw_rows(rng: &mut ChaCha8Rng, n: usize, frac: f64, bootstrap: bool) -> Vec<u32> {
    let k = (libm::round(frac * n as f64) as usize).clamp(1, n);
    if bootstrap {
        let mut rows: Vec<u32> = (0..k).map(|_| rng.random_range(0..n as u32)).collect();
        rows.sort_unstable();
        rows
    } else if k == n {
        (0..n as u32).collect()
    } else {
        let mut rows: Vec<u32> = sample(rng, n, k).into_iter().map(|i| i as u32).collect();
        rows.sort_unstable();
        rows
    }
}

/// Fits an ensemble on a column matrix.
pub fn fit_matrix(
    x: &ColumnMatrix,
    y: &[f64],
    schema: &FeatureSchema,
    config: &TrainConfig,
) -> Result<(Ensemble, FitLog), GbdtError> {
    config.validate()?;
    if x.n_rows != y.len() {
        return Err(GbdtError::Shape(format!("{} rows but {} targets", x.n_rows, y.len())));
    }
    if x.n_cols() != schema.len() {
        return Err(GbdtError::Shape(format!("{} columns but schema has {}", x.n_cols(), schema.len())));
    }
    if y.is_empty() {
        return Err(GbdtError::EmptyTable);
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(GbdtError::Shape(format!("target {i} is not finite")));
    }
    let n = y.len();
    let base_score = y.iter().sum::<f64>() / n as f64;
    let mut ensemble = Ensemble { base_score, trees: Vec::new(), config: config.clone(), schema: schema.clone() };
    let mut log = FitLog::default();
    if n == 1 {
        log.warnings.push("single-row table: model predicts the base score only".into());
        return Ok((ensemble, log));
    }
    if config.n_estimators == 0 {
        log.warnings.push("n_estimators = 0: model predicts the base score only".into());
        return Ok((ensemble, log));
    }

    let data = x.binned(config.max_bins);
    let params = config.grow_params();
    let rows_of = |i: usize| x.row(i);
    let raw_rows: Vec<Vec<f64>> = (0..n).map(rows_of).collect();

    match config.mode {
        Mode::Boosted => {
            let mut pred = vec![base_score; n];
            let mut resid = vec![0.0; n];
            for t in 0..config.n_estimators {
                for i in 0..n {
                    resid[i] = y[i] - pred[i];
                }
                let mut rng = tree_rng(config.seed, t);
                let features = draw_features(&mut rng, x.n_cols(), config.colsample);
                let rows = draw_rows(&mut rng, n, config.subsample, false);
                let tree = grow_tree(&data, rows, &resid, &features, &params);
                for (p, row) in pred.iter_mut().zip(&raw_rows) {
                    *p += tree.predict(row);
                }
                log.train_rmse.push(rmse(y, &pred));
                ensemble.trees.push(tree);
            }
        }
        Mode::Bagged => {
            let trees: Vec<Tree> = par::map_indexed(config.n_estimators, |t| {
                let mut rng = tree_rng(config.seed, t);
                let features = draw_features(&mut rng, x.n_cols(), config.colsample);
                let rows = draw_rows(&mut rng, n, config.subsample, true);
                grow_tree(&data, rows, y, &features, &params)
            });
            let mut sum = vec![0.0; n];
            for (k, tree) in trees.iter().enumerate() {
                for (s, row) in sum.iter_mut().zip(&raw_rows) {
                    *s += tree.predict(row);
                }
                let avg: Vec<f64> = sum.iter().map(|s| s / (k + 1) as f64).collect();
                log.train_rmse.push(rmse(y, &avg));
            }
            ensemble.trees = trees;
        }
    }
    Ok((ensemble, log))
}

/// Fits an ensemble on every row of a table.
pub fn fit(table: &DatasetTable, config: &TrainConfig) -> Result<Ensemble, GbdtError> {
    fit_with_log(table, config).map(|(e, _)| e)
}

pub fn fit_with_log(table: &DatasetTable, config: &TrainConfig) -> Result<(Ensemble, FitLog), GbdtError> {
    config.validate()?;
    if table.is_empty() {
        return Err(GbdtError::EmptyTable);
    }
    let x = ColumnMatrix::from_table(table, None)?;
    fit_matrix(&x, &table.targets(), &table.schema, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: usize,
    pub name: String,
    pub gain: f64,
    pub splits: u32,
}

/// Total split gain per feature, largest first; features never split on
/// are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceReport {
    pub fn total_gain(&self) -> f64 {
        self.entries.iter().map(|e| e.gain).sum()
    }

    pub fn top(&self, n: usize) -> &[ImportanceEntry] {
        &self.entries[..n.min(self.entries.len())]
    }
}

pub fn feature_importance_gain(ensemble: &Ensemble) -> ImportanceReport {
    let p = ensemble.schema.len();
    let mut gain = vec![0.0; p];
    let mut splits = vec![0u32; p];
    for tree in &ensemble.trees {
        for (f, g) in tree.splits() {
            gain[f] += g;
            splits[f] += 1;
        }
    }
    let mut entries: Vec<ImportanceEntry> = (0..p)
        .filter(|&f| splits[f] > 0)
        .map(|f| ImportanceEntry {
            feature: f,
            name: ensemble.schema.slots[f].name.clone(),
            gain: gain[f],
            splits: splits[f],
        })
        .collect();
    entries.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.feature.cmp(&b.feature)));
    ImportanceReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_problem(seed: u64, n: usize, p: usize) -> (ColumnMatrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let columns: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| if rng.random::<f64>() < 0.05 { f64::NAN } else { rng.random::<f64>() * 10.0 }).collect())
            .collect();
        let y = (0..n)
            .map(|i| {
                let a = if columns[0][i].is_nan() { 3.0 } else { columns[0][i] };
                a * a + 2.0 * columns[1 % p][i].max(0.0).clamp(0.0, 10.0) + rng.random::<f64>()
            })
            .collect();
        (ColumnMatrix { n_rows: n, columns }, y)
    }

    #[test]
    fn zero_estimators_predicts_base_score() {
        let (x, y) = random_problem(1, 50, 3);
        let cfg = TrainConfig { n_estimators: 0, ..TrainConfig::default() };
        let (m, log) = fit_matrix(&x, &y, &FeatureSchema::anonymous(3), &cfg).unwrap();
        assert!(m.trees.is_empty());
        assert_eq!(log.warnings.len(), 1);
        let mean = y.iter().sum::<f64>() / 50.0;
        assert_eq!(m.predict_row(&x.row(7)), mean);
    }

    #[test]
    fn single_row_table() {
        let x = ColumnMatrix { n_rows: 1, columns: vec![vec![1.0]] };
        let (m, log) = fit_matrix(&x, &[4.0], &FeatureSchema::anonymous(1), &TrainConfig::default()).unwrap();
        assert!(m.trees.is_empty());
        assert_eq!(m.predict_row(&[0.0]), 4.0);
        assert!(!log.warnings.is_empty());
    }

    #[test]
    fn rejects_bad_config() {
        for cfg in [
            TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
            TrainConfig { learning_rate: 1.5, ..TrainConfig::default() },
            TrainConfig { colsample: 0.0, ..TrainConfig::default() },
            TrainConfig { subsample: 2.0, ..TrainConfig::default() },
            TrainConfig { max_bins: 1, ..TrainConfig::default() },
            TrainConfig { max_bins: 300, ..TrainConfig::default() },
            TrainConfig { num_leaves: 0, ..TrainConfig::default() },
            TrainConfig { min_gain: -1.0, ..TrainConfig::default() },
        ] {
            assert!(matches!(cfg.validate(), Err(GbdtError::Config(_))), "{cfg:?}");
        }
        TrainConfig::lightgbm().validate().unwrap();
        TrainConfig::xgboost().validate().unwrap();
        TrainConfig::random_forest().validate().unwrap();
    }

    #[test]
    fn boosted_rmse_never_increases() {
        let (x, y) = random_problem(5, 300, 4);
        let cfg = TrainConfig { n_estimators: 60, num_leaves: 8, min_child_weight: 5, colsample: 0.75, ..TrainConfig::default() };
        let (_, log) = fit_matrix(&x, &y, &FeatureSchema::anonymous(4), &cfg).unwrap();
        assert!(log.train_rmse.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn overfit_model_memorizes() {
        let (x, y) = random_problem(9, 40, 2);
        let cfg = TrainConfig {
            n_estimators: 200,
            learning_rate: 1.0,
            num_leaves: 64,
            min_child_weight: 1,
            ..TrainConfig::default()
        };
        let (m, _) = fit_matrix(&x, &y, &FeatureSchema::anonymous(2), &cfg).unwrap();
        for i in 0..40 {
            assert!((m.predict_row(&x.row(i)) - y[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn all_nan_vector_is_finite() {
        let (x, y) = random_problem(2, 200, 3);
        let (m, _) = fit_matrix(&x, &y, &FeatureSchema::anonymous(3), &TrainConfig::lightgbm()).unwrap();
        assert!(m.predict_row(&[f64::NAN; 3]).is_finite());
    }

    #[test]
    fn predict_checks_schema() {
        let (x, y) = random_problem(2, 60, 3);
        let schema = FeatureSchema::anonymous(3);
        let (m, _) = fit_matrix(&x, &y, &schema, &TrainConfig { n_estimators: 3, ..TrainConfig::default() }).unwrap();
        let good = FeatureVector::new(x.row(0), &schema);
        assert_eq!(m.predict(&good).unwrap(), m.predict_row(&x.row(0)));
        let other = FeatureVector::new(x.row(0), &FeatureSchema::anonymous(4));
        assert_eq!(m.predict(&other), Err(GbdtError::SchemaMismatch));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let (x, y) = random_problem(4, 400, 6);
        let schema = FeatureSchema::anonymous(6);
        for cfg in [
            TrainConfig { colsample: 0.5, subsample: 0.7, n_estimators: 20, ..TrainConfig::default() },
            TrainConfig { n_estimators: 10, ..TrainConfig::random_forest() },
        ] {
            let a = fit_matrix(&x, &y, &schema, &cfg).unwrap().0;
            let b = fit_matrix(&x, &y, &schema, &cfg).unwrap().0;
            assert_eq!(a, b);
            let c = fit_matrix(&x, &y, &schema, &TrainConfig { seed: 99, ..cfg.clone() }).unwrap().0;
            assert_ne!(a, c);
        }
    }

    #[test]
    fn bagged_mode_averages_trees() {
        let (x, y) = random_problem(6, 300, 3);
        let cfg = TrainConfig { n_estimators: 15, ..TrainConfig::random_forest() };
        let (m, log) = fit_matrix(&x, &y, &FeatureSchema::anonymous(3), &cfg).unwrap();
        assert_eq!(m.trees.len(), 15);
        let row = x.row(3);
        let avg = m.trees.iter().map(|t| t.predict(&row)).sum::<f64>() / 15.0;
        assert_eq!(m.predict_row(&row), avg);
        assert!(*log.train_rmse.last().unwrap() < 2.0);
    }

    #[test]
    fn importance_of_a_stump() {
        let x = ColumnMatrix { n_rows: 6, columns: vec![vec![0.0; 6], vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]] };
        let y = [0.0, 0.0, 0.0, 6.0, 6.0, 6.0];
        let cfg = TrainConfig { n_estimators: 1, learning_rate: 1.0, num_leaves: 2, min_child_weight: 1, ..TrainConfig::default() };
        let (m, _) = fit_matrix(&x, &y, &FeatureSchema::anonymous(2), &cfg).unwrap();
        let rep = feature_importance_gain(&m);
        assert_eq!(rep.entries.len(), 1);
        assert_eq!(rep.entries[0].feature, 1);
        assert_eq!(rep.entries[0].name, "f1".to_string());
        assert_eq!(rep.entries[0].gain, 54.0);
        assert_eq!(rep.total_gain(), m.total_gain());
    }

    #[test]
    fn importance_conserves_gain() {
        let (x, y) = random_problem(8, 500, 5);
        let (m, _) = fit_matrix(&x, &y, &FeatureSchema::anonymous(5), &TrainConfig { n_estimators: 30, ..TrainConfig::lightgbm() }).unwrap();
        let rep = feature_importance_gain(&m);
        assert!(rep.entries.iter().all(|e| e.gain >= 0.0));
        assert!(rep.entries.windows(2).all(|w| w[0].gain >= w[1].gain));
        let node_total = m.total_gain();
        assert!((rep.total_gain() - node_total).abs() <= 1e-12 * node_total);
        let n_splits: u32 = rep.entries.iter().map(|e| e.splits).sum();
        assert_eq!(n_splits as usize, m.trees.iter().map(|t| t.splits().count()).sum::<usize>());
    }

    #[test]
    fn every_split_respects_min_gain() {
        let (x, y) = random_problem(12, 400, 4);
        let cfg = TrainConfig { n_estimators: 20, ..TrainConfig::xgboost() };
        let (m, _) = fit_matrix(&x, &y, &FeatureSchema::anonymous(4), &cfg).unwrap();
        assert!(m.trees.iter().flat_map(|t| t.splits()).all(|(_, g)| g >= 0.6));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_relabeling_preserves_predictions(seed in 0u64..1000) {
            let (x, y) = random_problem(seed, 120, 3);
            let relabel = |v: f64| if v.is_nan() { v } else { libm::exp(v / 4.0) - 7.0 };
            let z = ColumnMatrix {
                n_rows: x.n_rows,
                columns: x.columns.iter().map(|c| c.iter().map(|&v| relabel(v)).collect()).collect(),
            };
            let schema = FeatureSchema::anonymous(3);
            let cfg = TrainConfig { n_estimators: 10, num_leaves: 6, min_child_weight: 3, ..TrainConfig::default() };
            let a = fit_matrix(&x, &y, &schema, &cfg).unwrap().0;
            let b = fit_matrix(&z, &y, &schema, &cfg).unwrap().0;
            for i in 0..x.n_rows {
                prop_assert_eq!(a.predict_row(&x.row(i)).to_bits(), b.predict_row(&z.row(i)).to_bits());
            }
        }
    }
}
