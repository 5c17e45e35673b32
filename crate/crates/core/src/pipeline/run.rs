use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::cache::{extract_houses, ExtractReport, HouseFeatures};
use super::config::{sha256_hex, Estimator, RunConfig};
use crate::data::{load_houses_dataset, load_tabular_csv, split, SplitSpec, TabularDataset, TargetColumn};
use crate::error::{Error, Result};
use crate::fusion::{assemble, Normalizer, MAX_FEATURES};
use crate::metrics::{evaluate, mse, EvalReport, Scale};
use crate::mlp::{init_network_with, train_lm, MlpModel, Split, StopReason, TrainHistory, HIDDEN_UNITS};
use crate::svr::{grid_search, train_svr_with_gram, Gram, GridPoint, SvrConfig, SvrModel, C_GRID, EPSILON_GRID};

/// Offset mixed into the run seed for the SVR grid-search hold-out.
const GRID_SPLIT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// A dataset ready for feature assembly.
#[derive(Debug, Clone)]
pub enum Source {
    Houses(HouseFeatures),
    Tabular { data: TabularDataset, fingerprint: String },
}

impl Source {
    /// Directories load as image houses datasets (running extraction
    /// through `cache`), files as tabular CSVs.
    pub fn load(dataset: &Path, cache: Option<&Path>, cfg: &RunConfig) -> Result<Self> {
        if dataset.is_dir() {
            let houses = load_houses_dataset(dataset)?;
            Ok(Source::Houses(extract_houses(houses, &cfg.surf_params(), cache)?))
        } else {
            let target = match cfg.target.parse::<TargetColumn>() {
                Ok(t) => t,
                Err(never) => match never {},
            };
            let data = load_tabular_csv(dataset, &target)?;
            let bytes = std::fs::read(dataset).map_err(|e| Error::io(dataset, e))?;
            Ok(Source::Tabular {
                data,
                fingerprint: sha256_hex(&bytes),
            })
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Source::Houses(h) => h.houses.len(),
            Source::Tabular { data, .. } => data.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fingerprint(&self) -> String {
        match self {
            Source::Houses(h) => h.fingerprint(),
            Source::Tabular { fingerprint, .. } => fingerprint.clone(),
        }
    }

    pub fn extract_report(&self) -> Option<&ExtractReport> {
        match self {
            Source::Houses(h) => Some(&h.report),
            Source::Tabular { .. } => None,
        }
    }

    /// Prices in original units.
    pub fn targets(&self) -> Vec<f64> {
        match self {
            Source::Houses(h) => h.houses.iter().map(|r| r.price).collect(),
            Source::Tabular { data, .. } => data.targets.clone(),
        }
    }

    /// Raw (unnormalized) feature rows with `n` visual features per image.
    pub fn rows(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        if n > MAX_FEATURES {
            return Err(Error::Argument(format!("at most {MAX_FEATURES} features per image, got {n}")));
        }
        match self {
            Source::Houses(h) => h
                .houses
                .iter()
                .map(|house| {
                    let empty = Default::default();
                    let d = h.descriptors.get(&house.id).unwrap_or(&empty);
                    assemble(house, d, n).map(|v| v.values)
                })
                .collect(),
            Source::Tabular { data, .. } if n == 0 => Ok(data.rows.clone()),
            Source::Tabular { .. } => Err(Error::Argument(
                "tabular datasets have no images; only n = 0 is available".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub c: Option<f64>,
    pub epsilon: Option<f64>,
    pub lambda0: Option<f64>,
    pub patience: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "lowercase")]
pub enum TrainedModel {
    Svr(SvrModel),
    Nn(MlpModel),
}

impl TrainedModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            TrainedModel::Svr(m) => m.predict(x),
            TrainedModel::Nn(m) => m.forward(x),
        }
    }
}

/// Metrics written as `report.json`; identical inputs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub estimator: Estimator,
    pub n: usize,
    pub seed: u64,
    pub split_sizes: Vec<usize>,
    pub train_mse_norm: f64,
    pub test_normalized: EvalReport,
    pub test_usd: EvalReport,
    pub converged: bool,
    pub hyperparameters: Hyperparameters,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub model: TrainedModel,
    pub features: Normalizer,
    pub target: Normalizer,
    pub grid: Option<Vec<GridPoint>>,
    pub history: Option<TrainHistory>,
    /// Indices of the test rows and their predictions in original units.
    pub test_predictions: Vec<(usize, f64, f64)>,
}

/// Maps a normalized prediction back to price units. A constant training
/// target normalizes to 0 everywhere, so its inverse is that constant.
fn to_original(target: &Normalizer, z: f64) -> Result<f64> {
    if target.constant[0] {
        Ok(target.min[0])
    } else {
        target.denormalize_target(z)
    }
}

fn pick<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

/// Assembles features, fits the scalers on the training part, trains the
/// estimator and evaluates it on the held-out test part.
pub fn train_eval(source: &Source, estimator: Estimator, n: usize, seed: u64, cfg: &RunConfig) -> Result<RunOutcome> {
    let raw = source.rows(n)?;
    let prices = source.targets();
    let spec = match estimator {
        Estimator::Svr => SplitSpec::train_test(seed),
        Estimator::Nn => SplitSpec::train_val_test(seed),
    };
    let parts = split(raw.len(), &spec)?;
    let train_idx = &parts[0];
    let test_idx = parts.last().expect("at least two parts");

    let features = Normalizer::fit(&pick(&raw, train_idx))?;
    let target = Normalizer::fit_column(&pick(&prices, train_idx))?;
    let x = features.transform_all(&raw)?;
    let y: Vec<f64> = prices
        .iter()
        .map(|&p| target.transform_value(0, p))
        .collect::<Result<_>>()?;

    let x_train = pick(&x, train_idx);
    let y_train = pick(&y, train_idx);
    let mut grid = None;
    let mut history = None;
    let (model, converged, hyper) = match estimator {
        Estimator::Svr => {
            let kernel = cfg.kernel_spec();
            let gram = Gram::compute(&x_train, &kernel);
            let (c, epsilon) = match (cfg.svr_c, cfg.svr_epsilon) {
                (Some(c), Some(e)) => (c, e),
                (c, e) => {
                    let c_grid = c.map_or(C_GRID.to_vec(), |c| vec![c]);
                    let e_grid = e.map_or(EPSILON_GRID.to_vec(), |e| vec![e]);
                    let hold = SplitSpec {
                        fractions: vec![1.0 - cfg.svr_val_fraction, cfg.svr_val_fraction],
                        seed: seed ^ GRID_SPLIT_SALT,
                        scheme: crate::data::SplitScheme::TrainTest,
                    };
                    let sub = split(x_train.len(), &hold)?;
                    let base = cfg.svr_base();
                    let (points, best) =
                        grid_search(&x_train, &y_train, &gram, &sub[0], &sub[1], &base, kernel, &c_grid, &e_grid)?;
                    let chosen = (points[best].c, points[best].epsilon);
                    grid = Some(points);
                    chosen
                }
            };
            let svr_cfg = SvrConfig {
                c,
                epsilon,
                ..cfg.svr_base()
            };
            let m = train_svr_with_gram(&x_train, &y_train, &gram, &svr_cfg, kernel)?;
            let converged = m.converged;
            let hp = Hyperparameters {
                c: Some(c),
                epsilon: Some(epsilon),
                lambda0: None,
                patience: None,
            };
            (TrainedModel::Svr(m), converged, hp)
        }
        Estimator::Nn => {
            let lm = cfg.lm_config(seed);
            let init = init_network_with(x[0].len(), HIDDEN_UNITS, cfg.output, seed)?;
            let (xv, yv) = (pick(&x, &parts[1]), pick(&y, &parts[1]));
            let (xt, yt) = (pick(&x, test_idx), pick(&y, test_idx));
            let (m, h) = train_lm(
                init,
                Split::new(&x_train, &y_train),
                Split::new(&xv, &yv),
                Some(Split::new(&xt, &yt)),
                &lm,
            )?;
            let converged = h.stop_reason != StopReason::MaxEpochs;
            history = Some(h);
            let hp = Hyperparameters {
                c: None,
                epsilon: None,
                lambda0: Some(lm.lambda0),
                patience: Some(lm.patience),
            };
            (TrainedModel::Nn(m), converged, hp)
        }
    };

    let train_pred: Vec<f64> = x_train.iter().map(|r| model.predict(r)).collect::<Result<_>>()?;
    let test_pred: Vec<f64> = test_idx.iter().map(|&i| model.predict(&x[i])).collect::<Result<_>>()?;
    let test_y = pick(&y, test_idx);
    let test_usd_pred: Vec<f64> = test_pred.iter().map(|&z| to_original(&target, z)).collect::<Result<_>>()?;
    let test_usd = pick(&prices, test_idx);

    let report = RunReport {
        estimator,
        n,
        seed,
        split_sizes: parts.iter().map(Vec::len).collect(),
        train_mse_norm: mse(&train_pred, &y_train)?,
        test_normalized: evaluate(&test_pred, &test_y, Scale::Normalized)?,
        test_usd: evaluate(&test_usd_pred, &test_usd, Scale::Usd)?,
        converged,
        hyperparameters: hyper,
    };
    Ok(RunOutcome {
        report,
        model,
        features,
        target,
        grid,
        history,
        test_predictions: test_idx
            .iter()
            .zip(test_usd_pred)
            .map(|(&i, p)| (i, prices[i], p))
            .collect(),
    })
}

/// Everything needed to re-run one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software_version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub dataset: PathBuf,
    pub dataset_fingerprint: String,
    pub estimator: Estimator,
    pub n: usize,
    pub seed: u64,
    pub split_sizes: Vec<usize>,
    pub hyperparameters: Hyperparameters,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn new(dataset: &Path, source: &Source, cfg: &RunConfig, outcome: &RunOutcome, started_unix: u64) -> Self {
        let r = &outcome.report;
        Self {
            software_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
            config: cfg.clone(),
            dataset: dataset.to_path_buf(),
            dataset_fingerprint: source.fingerprint(),
            estimator: r.estimator,
            n: r.n,
            seed: r.seed,
            split_sizes: r.split_sizes.clone(),
            hyperparameters: r.hyperparameters.clone(),
            started_unix,
            finished_unix: unix_now(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Re-runs training on `source`, which must match the recorded fingerprint.
    pub fn replay(&self, source: &Source) -> Result<RunOutcome> {
        if self.config.hash() != self.config_hash {
            return Err(Error::Config("manifest config does not match its hash".into()));
        }
        let fp = source.fingerprint();
        if fp != self.dataset_fingerprint {
            return Err(Error::Data(format!(
                "dataset fingerprint {fp} differs from the recorded {}",
                self.dataset_fingerprint
            )));
        }
        train_eval(source, self.estimator, self.n, self.seed, &self.config)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub const MODEL_FILE: &str = "model.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";

/// Writes model, scalers, report, manifest, predictions and the estimator's
/// training trace (`grid.csv` or `history.csv`) into `out`.
pub fn write_outputs(out: &Path, outcome: &RunOutcome, manifest: &RunManifest) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(&out.join(MODEL_FILE), &serde_json::to_string_pretty(&outcome.model)?)?;
    outcome.features.save(&out.join("feature_normalizer.json"))?;
    outcome.target.save(&out.join("target_normalizer.json"))?;
    write(&out.join(REPORT_FILE), &serde_json::to_string_pretty(&outcome.report)?)?;
    write(&out.join(MANIFEST_FILE), &serde_json::to_string_pretty(manifest)?)?;
    let mut preds = String::from("row,price,predicted\n");
    for (i, y, p) in &outcome.test_predictions {
        preds.push_str(&format!("{i},{y},{p}\n"));
    }
    write(&out.join("predictions.csv"), &preds)?;
    if let Some(h) = &outcome.history {
        write(&out.join("history.csv"), &h.to_csv())?;
    }
    if let Some(g) = &outcome.grid {
        let mut s = String::from("c,epsilon,val_mse,converged\n");
        for p in g {
            s.push_str(&format!("{},{},{},{}\n", p.c, p.epsilon, p.val_mse, p.converged));
        }
        write(&out.join("grid.csv"), &s)?;
    }
    Ok(())
}

/// Scores a saved run directory on the test part recorded in its manifest.
pub fn evaluate_saved(run_dir: &Path, source: &Source) -> Result<(EvalReport, EvalReport)> {
    let manifest = RunManifest::load(&run_dir.join(MANIFEST_FILE))?;
    let model_path = run_dir.join(MODEL_FILE);
    let text = std::fs::read_to_string(&model_path).map_err(|e| Error::io(&model_path, e))?;
    let model: TrainedModel = serde_json::from_str(&text)?;
    let features = Normalizer::load(&run_dir.join("feature_normalizer.json"))?;
    let target = Normalizer::load(&run_dir.join("target_normalizer.json"))?;
    if source.fingerprint() != manifest.dataset_fingerprint {
        return Err(Error::Data("dataset differs from the one the model was trained on".into()));
    }
    let raw = source.rows(manifest.n)?;
    let prices = source.targets();
    let spec = match manifest.estimator {
        Estimator::Svr => SplitSpec::train_test(manifest.seed),
        Estimator::Nn => SplitSpec::train_val_test(manifest.seed),
    };
    let parts = split(raw.len(), &spec)?;
    let test = parts.last().expect("at least two parts");
    let mut zp = Vec::new();
    let mut zy = Vec::new();
    let mut up = Vec::new();
    let mut uy = Vec::new();
    for &i in test {
        let z = model.predict(&features.transform(&raw[i])?)?;
        zp.push(z);
        zy.push(target.transform_value(0, prices[i])?);
        up.push(to_original(&target, z)?);
        uy.push(prices[i]);
    }
    Ok((evaluate(&zp, &zy, Scale::Normalized)?, evaluate(&up, &uy, Scale::Usd)?))
}
