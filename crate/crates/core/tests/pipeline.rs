use std::path::{Path, PathBuf};
use std::process::Command;

use houseprice::pipeline::{
    extract_houses, namespace, read_sweep, run_sweep, train_eval, write_outputs, write_rows, Estimator, RunConfig,
    RunManifest, Source, TrainedModel, MANIFEST_FILE, REPORT_FILE,
};
use houseprice::data::load_houses_dataset;
use houseprice::surf::SurfParams;
use houseprice::synthetic::{generate_houses_dataset, SyntheticSpec};
use tempfile::TempDir;

fn boston() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/boston_housing.csv")
}

/// First `rows` Boston rows, with the target optionally replaced.
fn small_table(dir: &Path, rows: usize, target: Option<f64>) -> PathBuf {
    let text = std::fs::read_to_string(boston()).unwrap();
    let mut out = String::new();
    for (i, line) in text.lines().take(rows + 1).enumerate() {
        match target {
            Some(t) if i > 0 => {
                let cells: Vec<&str> = line.split(',').collect();
                out.push_str(&cells[..cells.len() - 1].join(","));
                out.push_str(&format!(",{t}\n"));
            }
            _ => {
                out.push_str(line);
                out.push('\n');
            }
        }
    }
    let path = dir.join(format!("table_{rows}_{target:?}.csv"));
    std::fs::write(&path, out).unwrap();
    path
}

fn quick_config() -> RunConfig {
    RunConfig {
        svr_c: Some(10.0),
        svr_epsilon: Some(0.01),
        max_epochs: 60,
        n_values: vec![0],
        seeds: vec![1, 2],
        ..RunConfig::default()
    }
}

fn houses(dir: &Path, count: usize) -> PathBuf {
    let root = dir.join("houses");
    let spec = SyntheticSpec {
        houses: count,
        image_size: 96,
        ..SyntheticSpec::default()
    };
    generate_houses_dataset(&root, &spec).unwrap();
    root
}

#[test]
fn descriptor_cache_is_reused_and_namespaced() {
    let dir = TempDir::new().unwrap();
    let root = houses(dir.path(), 5);
    let cache = dir.path().join("cache");
    let params = SurfParams {
        hessian_threshold: 50.0,
        ..SurfParams::default()
    };
    let first = extract_houses(load_houses_dataset(&root).unwrap(), &params, Some(&cache)).unwrap();
    assert_eq!((first.report.computed, first.report.reused), (20, 0));
    let again = extract_houses(load_houses_dataset(&root).unwrap(), &params, Some(&cache)).unwrap();
    assert_eq!((again.report.computed, again.report.reused), (0, 20));
    assert_eq!(first.descriptors, again.descriptors);
    assert_eq!(first.fingerprint(), again.fingerprint());

    let other = SurfParams {
        hessian_threshold: 80.0,
        ..params
    };
    assert_ne!(namespace(&params), namespace(&other));
    let changed = extract_houses(load_houses_dataset(&root).unwrap(), &other, Some(&cache)).unwrap();
    assert_eq!(changed.report.computed, 20);
    assert!(cache.join(namespace(&params)).is_dir() && cache.join(namespace(&other)).is_dir());
}

#[test]
fn image_runs_use_visual_features() {
    let dir = TempDir::new().unwrap();
    let root = houses(dir.path(), 24);
    let cfg = RunConfig {
        hessian_threshold: 50.0,
        ..quick_config()
    };
    let source = Source::load(&root, None, &cfg).unwrap();
    for est in [Estimator::Svr, Estimator::Nn] {
        let o = train_eval(&source, est, 2, 3, &cfg).unwrap();
        // 4 textual + 4 images x 2 points x 64 values
        let width = match &o.model {
            TrainedModel::Nn(m) => m.inputs(),
            TrainedModel::Svr(m) => m.support_vectors.first().map_or(4 + 512, Vec::len),
        };
        assert_eq!(width, 4 + 512);
        assert_eq!(o.features.dims, 4 + 512);
    }
}

#[test]
fn identical_runs_give_identical_reports() {
    let dir = TempDir::new().unwrap();
    let table = small_table(dir.path(), 120, None);
    let cfg = quick_config();
    let source = Source::load(&table, None, &cfg).unwrap();
    for est in [Estimator::Svr, Estimator::Nn] {
        let a = train_eval(&source, est, 0, 7, &cfg).unwrap();
        let b = train_eval(&source, est, 0, 7, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
        assert_eq!(a.model, b.model);
    }
}

#[test]
fn constant_prices_give_zero_error_and_undefined_r() {
    let dir = TempDir::new().unwrap();
    let table = small_table(dir.path(), 50, Some(250000.0));
    let cfg = RunConfig::default();
    let source = Source::load(&table, None, &cfg).unwrap();
    let o = train_eval(&source, Estimator::Svr, 0, 1, &cfg).unwrap();
    assert_eq!(o.report.test_normalized.mse, 0.0);
    assert_eq!(o.report.test_usd.mse, 0.0);
    assert_eq!(o.report.test_normalized.r_squared, None);
    assert_eq!(o.report.test_normalized.r_value, None);
    assert!(o.test_predictions.iter().all(|(_, y, p)| y == p));
}

#[test]
fn test_rows_never_influence_training() {
    let dir = TempDir::new().unwrap();
    let clean = small_table(dir.path(), 120, None);
    let cfg = quick_config();
    let source = Source::load(&clean, None, &cfg).unwrap();
    for est in [Estimator::Svr, Estimator::Nn] {
        let base = train_eval(&source, est, 0, 5, &cfg).unwrap();
        let test_rows: Vec<usize> = base.test_predictions.iter().map(|t| t.0).collect();

        // corrupt every test row, features and price alike
        let text = std::fs::read_to_string(&clean).unwrap();
        let mut out = String::new();
        for (i, line) in text.lines().enumerate() {
            if i > 0 && test_rows.contains(&(i - 1)) {
                let n = line.split(',').count();
                out.push_str(&vec!["1e6"; n].join(","));
            } else {
                out.push_str(line);
            }
            out.push('\n');
        }
        let dirty = dir.path().join(format!("dirty_{est}.csv"));
        std::fs::write(&dirty, out).unwrap();
        let poisoned = train_eval(&Source::load(&dirty, None, &cfg).unwrap(), est, 0, 5, &cfg).unwrap();
        assert_eq!(base.features, poisoned.features);
        assert_eq!(base.target, poisoned.target);
        assert_eq!(base.model, poisoned.model);
        assert_eq!(base.report.train_mse_norm, poisoned.report.train_mse_norm);
    }
}

#[test]
fn manifest_replays_the_run() {
    let dir = TempDir::new().unwrap();
    let table = small_table(dir.path(), 120, None);
    let cfg = quick_config();
    let source = Source::load(&table, None, &cfg).unwrap();
    let outcome = train_eval(&source, Estimator::Nn, 0, 9, &cfg).unwrap();
    let out = dir.path().join("run");
    let manifest = RunManifest::new(&table, &source, &cfg, &outcome, 0);
    write_outputs(&out, &outcome, &manifest).unwrap();
    let loaded = RunManifest::load(&out.join(MANIFEST_FILE)).unwrap();
    assert_eq!(loaded, manifest);
    let replayed = loaded.replay(&source).unwrap();
    let stored = std::fs::read_to_string(out.join(REPORT_FILE)).unwrap();
    assert_eq!(serde_json::to_string_pretty(&replayed.report).unwrap(), stored);

    let other = Source::load(&small_table(dir.path(), 110, None), None, &cfg).unwrap();
    assert!(loaded.replay(&other).is_err());
}

#[test]
fn sweep_rows_round_trip_through_csv() {
    let dir = TempDir::new().unwrap();
    let table = small_table(dir.path(), 100, None);
    let cfg = quick_config();
    let rows = run_sweep(&Source::load(&table, None, &cfg).unwrap(), &cfg);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.error.is_none()));
    let path = dir.path().join("sweep.csv");
    write_rows(&path, &rows).unwrap();
    assert_eq!(read_sweep(&path).unwrap(), rows);
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_houseprice")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn cli_exit_codes() {
    let dir = TempDir::new().unwrap();
    let table = small_table(dir.path(), 80, None);
    let t = table.to_str().unwrap();
    let run = dir.path().join("run");
    let r = run.to_str().unwrap();

    let (code, err) = cli(&["train", "--dataset", t, "--estimator", "svr", "--out", r]);
    assert_eq!(code, 0, "{err}");
    assert!(run.join(MANIFEST_FILE).is_file());
    assert_eq!(cli(&["eval", "--dataset", t, "--out", r]).0, 0);

    let missing = dir.path().join("nope.csv");
    assert_eq!(cli(&["train", "--dataset", missing.to_str().unwrap(), "--estimator", "nn", "--out", r]).0, 1);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "no_such_key = 3\n").unwrap();
    let b = bad.to_str().unwrap();
    assert_eq!(cli(&["train", "--dataset", t, "--config", b, "--estimator", "nn", "--out", r]).0, 2);
    std::fs::write(&bad, "max_epochs = 0\n").unwrap();
    assert_eq!(cli(&["train", "--dataset", t, "--config", b, "--estimator", "nn", "--out", r]).0, 2);

    let short = dir.path().join("short.toml");
    std::fs::write(&short, "max_epochs = 1\npatience = 50\n").unwrap();
    let s = short.to_str().unwrap();
    let strict = ["train", "--dataset", t, "--config", s, "--estimator", "nn", "--out", r, "--strict"];
    assert_eq!(cli(&strict).0, 3);
    assert_eq!(cli(&strict[..strict.len() - 1]).0, 0);

    let sweep = dir.path().join("sweep");
    let sw = sweep.to_str().unwrap();
    let small = dir.path().join("small.toml");
    std::fs::write(&small, "n_values = [0]\nseeds = [1]\nmax_epochs = 20\nsvr_c = 1.0\nsvr_epsilon = 0.01\n").unwrap();
    assert_eq!(cli(&["sweep", "--dataset", t, "--config", small.to_str().unwrap(), "--out", sw]).0, 0);
    assert_eq!(cli(&["report", "--out", sw]).0, 0);
    for f in ["sweep.csv", "sweep_summary.csv", "mse_vs_n.svg", "r_vs_n.svg", "trend.json"] {
        assert!(sweep.join(f).is_file(), "{f} missing");
    }
}
