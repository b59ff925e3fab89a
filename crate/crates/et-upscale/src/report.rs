//! JSON and CSV renderings of evaluation, grid-search and importance results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use et_upscale_core::eval::{EvalReport, GridSearchResult, StratumSummary};
use et_upscale_core::gbdt::ImportanceEntry;

use crate::ingest::write_file;

/// Per-fold metrics.
pub fn folds_csv(r: &EvalReport) -> String {
    let mut s = String::from("fold,n_train,n_valid,mae,rmse,r2\n");
    for f in &r.folds {
        let m = &f.metrics;
        let _ = writeln!(s, "{},{},{},{},{},{}", f.fold, f.n_train, f.n_valid, m.mae, m.rmse, m.r2);
    }
    let a = &r.aggregate;
    let _ = writeln!(s, "mean,,,{},{},{}", a.mae.mean, a.rmse.mean, a.r2.mean);
    let _ = writeln!(s, "se,,,{},{},{}", a.mae.se, a.rmse.se, a.r2.se);
    s
}

/// Stratified RMSE table (month or IGBP class).
pub fn strata_csv<K: std::fmt::Display>(key_name: &str, strata: &[StratumSummary<K>]) -> String {
    let mut s = format!("{key_name},n_folds,rmse_mean,rmse_se,rmse_mm_day_mean,rmse_mm_day_se\n");
    for x in strata {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            x.key, x.n_folds, x.rmse.mean, x.rmse.se, x.rmse_mm_day.mean, x.rmse_mm_day.se
        );
    }
    s
}

/// Writes `<prefix>.json`, `<prefix>_folds.csv`, `<prefix>_months.csv` and
/// `<prefix>_igbp.csv` into `dir`; returns the paths.
pub fn write_eval_report(r: &EvalReport, dir: &Path, prefix: &str) -> std::io::Result<Vec<PathBuf>> {
    let files = [
        (format!("{prefix}.json"), serde_json::to_string_pretty(r).expect("report serializes")),
        (format!("{prefix}_folds.csv"), folds_csv(r)),
        (format!("{prefix}_months.csv"), strata_csv("month", &r.by_month)),
        (format!("{prefix}_igbp.csv"), strata_csv("igbp", &r.by_igbp)),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        write_file(&p, body.as_bytes())?;
        out.push(p);
    }
    Ok(out)
}

pub fn grid_search_csv(r: &GridSearchResult) -> String {
    let mut s = String::from(
        "index,best,n_estimators,learning_rate,num_leaves,max_depth,min_child_weight,min_gain,colsample,subsample,rmse_mean,rmse_se,mae_mean,r2_mean\n",
    );
    for (i, p) in r.points.iter().enumerate() {
        let c = &p.config;
        let a = &p.aggregate;
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            i == r.best_index,
            c.n_estimators,
            c.learning_rate,
            c.num_leaves,
            c.max_depth,
            c.min_child_weight,
            c.min_gain,
            c.colsample,
            c.subsample,
            a.rmse.mean,
            a.rmse.se,
            a.mae.mean,
            a.r2.mean
        );
    }
    s
}

pub fn importance_csv(entries: &[ImportanceEntry]) -> String {
    let mut s = String::from("feature,gain,splits\n");
    for e in entries {
        let _ = writeln!(s, "{},{},{}", e.name, e.gain, e.splits);
    }
    s
}
