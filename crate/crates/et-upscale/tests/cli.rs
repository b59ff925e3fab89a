use std::fs;
use std::path::{Path, PathBuf};

use et_upscale::cli::run;
use et_upscale::etgrid::read_grid;
use et_upscale::model::load_model;
use et_upscale_core::grid::EtUnit;

/// A run directory with a config for a 4-site, 3-year synthetic study and a
/// 3x3 prediction grid.
fn setup(extra: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let body = format!(
        r#"{{
  "synth": {{"n_sites": 4, "years": 3, "start_year": 2018}},
  "train": {{"n_estimators": 20}},
  "eval": {{"k": 3}},
  "grid": {{
    "spec": {{"lat_min": 41.0, "lat_max": 41.03, "lon_min": -95.0, "lon_max": -94.97, "cell_deg": 0.01}},
    "dates": ["2020-06-10"]
  }}{extra}
}}"#
    );
    fs::write(&cfg, body).unwrap();
    (dir, cfg)
}

fn et(cfg: &Path, args: &[&str]) -> i32 {
    let mut v = vec!["et-upscale".to_string(), "--config".into(), cfg.display().to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    run(v)
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn synth_is_deterministic() {
    let (dir, cfg) = setup("");
    assert_eq!(et(&cfg, &["synth"]), 0);
    let data = dir.path().join("data");
    assert_eq!(
        files(&data),
        ["flux.csv", "grid_meteo.csv", "grid_reflectance.csv", "grid_sites.csv", "meteo.csv", "reflectance.csv", "sites.csv"]
    );
    let first: Vec<Vec<u8>> = files(&data).iter().map(|f| fs::read(data.join(f)).unwrap()).collect();
    assert_eq!(et(&cfg, &["synth", "--out", dir.path().join("again").to_str().unwrap()]), 0);
    for (f, bytes) in files(&data).iter().zip(&first) {
        assert_eq!(&fs::read(dir.path().join("again").join(f)).unwrap(), bytes, "{f}");
    }
    let flux = fs::read_to_string(data.join("flux.csv")).unwrap();
    let site_years: std::collections::BTreeSet<(String, String)> = flux
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',');
            (it.next().unwrap().to_string(), it.next().unwrap()[..4].to_string())
        })
        .collect();
    assert_eq!(site_years.len(), 12);
    assert_eq!(et(&cfg, &["--set", "seed=5", "synth", "--out", dir.path().join("other").to_str().unwrap()]), 0);
    assert_ne!(fs::read(dir.path().join("other/flux.csv")).unwrap(), first[0]);
}

#[test]
fn train_cv_predict_importance() {
    let (dir, cfg) = setup("");
    assert_eq!(et(&cfg, &["synth"]), 0);
    assert_eq!(et(&cfg, &["train"]), 0);
    let model_path = dir.path().join("out/model.json");
    assert!(dir.path().join("out/model.schema.json").exists());
    let model = load_model(&model_path).unwrap();
    assert_eq!(model.trees.len(), 20);

    // same inputs and seed give the same model file
    let again = dir.path().join("again.json");
    assert_eq!(et(&cfg, &["--threads", "1", "train", "--model", again.to_str().unwrap()]), 0);
    assert_eq!(fs::read(&again).unwrap(), fs::read(&model_path).unwrap());

    assert_eq!(et(&cfg, &["cv"]), 0);
    for f in ["cv.json", "cv_folds.csv", "cv_months.csv", "cv_igbp.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let folds = fs::read_to_string(dir.path().join("out/cv_folds.csv")).unwrap();
    assert_eq!(folds.lines().count(), 1 + 3 + 2);

    assert_eq!(et(&cfg, &["predict-grid", "--csv"]), 0);
    let g = read_grid(&dir.path().join("out/et_2020-06-10.etg")).unwrap();
    assert_eq!(g.unit, EtUnit::WattsPerM2);
    assert_eq!(g.values.len(), 9);
    assert!(g.values.iter().all(|v| v.is_finite()));
    assert!(dir.path().join("out/et_2020-06-10.csv").exists());

    let imp = dir.path().join("imp.csv");
    assert_eq!(et(&cfg, &["importance", "--top", "5", "--out", imp.to_str().unwrap()]), 0);
    let text = fs::read_to_string(&imp).unwrap();
    assert_eq!(text.lines().next(), Some("feature,gain,splits"));
    assert!(text.lines().count() <= 6 && text.lines().count() > 1);

    let mmday = dir.path().join("mm.etg");
    let input = dir.path().join("out/et_2020-06-10.etg");
    assert_eq!(run(["et-upscale", "convert", input.to_str().unwrap(), "--to", "mm day-1", "--output", mmday.to_str().unwrap()]), 0);
    let c = read_grid(&mmday).unwrap();
    assert_eq!(c.unit, EtUnit::MmPerDay);
    assert!((c.values[0] / g.values[0] - 0.0864 / 2.45).abs() < 1e-6);
    assert_eq!(run(["et-upscale", "convert", input.to_str().unwrap()]), 2);
}

#[test]
fn monthly_sums_over_january() {
    let dates: Vec<String> = (1..=31).map(|d| format!("\"2020-01-{d:02}\"")).collect();
    let (dir, cfg) = setup("");
    let over = format!("grid.dates=[{}]", dates.join(","));
    assert_eq!(et(&cfg, &["--set", &over, "synth"]), 0);
    assert_eq!(et(&cfg, &["train"]), 0);
    let out = dir.path().join("grids");
    assert_eq!(et(&cfg, &["--set", &over, "predict-grid", "--monthly", "--out", out.to_str().unwrap()]), 0);
    assert_eq!(files(&out).len(), 32);
    let month = read_grid(&out.join("et_2020-01.etg")).unwrap();
    assert_eq!(month.unit, EtUnit::MmPerMonth);
    let mut sum = [0.0f64; 9];
    for d in 1..=31 {
        let day = read_grid(&out.join(format!("et_2020-01-{d:02}.etg"))).unwrap();
        for (s, v) in sum.iter_mut().zip(&day.values) {
            *s += f64::from(*v) * 0.0864 / 2.45;
        }
    }
    for (s, v) in sum.iter().zip(&month.values) {
        assert!((s - f64::from(*v)).abs() <= 1e-4 * s.abs().max(1.0), "{s} vs {v}");
    }

    // an incomplete month is skipped, not fatal
    let partial = dir.path().join("partial");
    assert_eq!(et(&cfg, &["--set", "grid.dates=[\"2020-01-01\",\"2020-01-02\"]", "predict-grid", "--monthly", "--out", partial.to_str().unwrap()]), 0);
    assert_eq!(files(&partial).len(), 2);
}

#[test]
fn threads_do_not_change_outputs() {
    let (dir, cfg) = setup("");
    assert_eq!(et(&cfg, &["synth"]), 0);
    let mut outputs = Vec::new();
    for t in ["1", "4"] {
        let out = dir.path().join(format!("t{t}"));
        let model = out.join("model.json");
        assert_eq!(et(&cfg, &["--threads", t, "train", "--model", model.to_str().unwrap()]), 0);
        assert_eq!(et(&cfg, &["--threads", t, "cv", "--out", out.to_str().unwrap()]), 0);
        assert_eq!(et(&cfg, &["--threads", t, "predict-grid", "--model", model.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
        outputs.push(files(&out).iter().map(|f| fs::read(out.join(f)).unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn grid_search_writes_best_config() {
    let (dir, cfg) = setup(r#", "search": {"learning_rate": [0.05, 0.2], "num_leaves": [4, 8]}"#);
    assert_eq!(et(&cfg, &["synth"]), 0);
    assert_eq!(et(&cfg, &["grid-search"]), 0);
    let csv = fs::read_to_string(dir.path().join("out/grid_search.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(csv.lines().skip(1).filter(|l| l.split(',').nth(1) == Some("true")).count(), 1);
    let best: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("out/best_train.json")).unwrap()).unwrap();
    assert!(best["learning_rate"].is_number());
}

#[test]
fn exit_codes() {
    let (dir, cfg) = setup("");
    // missing inputs
    assert_eq!(et(&cfg, &["train"]), 3);
    assert_eq!(run(["et-upscale", "--config", "/nonexistent/run.json", "train"]), 3);
    assert_eq!(et(&cfg, &["synth"]), 0);
    fs::remove_file(dir.path().join("data/flux.csv")).unwrap();
    assert_eq!(et(&cfg, &["train"]), 3);
    assert_eq!(et(&cfg, &["synth"]), 0);

    // config problems
    assert_eq!(et(&cfg, &["--set", "train.bogus=1", "train"]), 2);
    assert_eq!(et(&cfg, &["--train.learning_rate", "0", "train"]), 2);
    assert_eq!(run(["et-upscale", "frobnicate"]), 2);
    assert_eq!(et(&cfg, &["--threads", "0", "train"]), 2);

    // 4 sites x 3 years = 12 groups
    assert_eq!(et(&cfg, &["cv", "-k", "20"]), 5);
    assert_eq!(et(&cfg, &["cv", "-k", "1"]), 5);
    assert_eq!(et(&cfg, &["cv", "-k", "12", "--out", dir.path().join("loo").to_str().unwrap()]), 0);

    // no rows survive the QC filter
    fs::write(dir.path().join("data/flux.csv"), "site_id,date,le_f_mds,le_f_mds_qc\n").unwrap();
    assert_eq!(et(&cfg, &["train"]), 4);

    // malformed model file
    fs::write(dir.path().join("bad.json"), "{}").unwrap();
    assert_eq!(et(&cfg, &["importance", "--model", dir.path().join("bad.json").to_str().unwrap()]), 3);
}

#[test]
fn untrained_model_has_empty_importance() {
    let (dir, cfg) = setup("");
    assert_eq!(et(&cfg, &["synth"]), 0);
    assert_eq!(et(&cfg, &["--train.n_estimators=0", "train"]), 0);
    let model = load_model(&dir.path().join("out/model.json")).unwrap();
    assert!(model.trees.is_empty());
    let imp = dir.path().join("imp.csv");
    assert_eq!(et(&cfg, &["importance", "--out", imp.to_str().unwrap()]), 0);
    assert_eq!(fs::read_to_string(&imp).unwrap(), "feature,gain,splits\n");
}
