//! Single-hidden-layer sigmoid network trained with Levenberg–Marquardt.
//!
//! Parameters are packed as `[hidden weights (unit-major), hidden biases,
//! output weights, output bias]`. Each epoch solves the damped normal
//! equations `(J'J + lambda D) delta = -J'r` with `D = I` (Levenberg, the
//! default) or `D = diag(J'J)` (Marquardt); when the network has more
//! parameters than training samples the equivalent sample-space system
//! `(J_s J_s' + lambda I)` is solved instead, with `J_s = J D^(-1/2)`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HIDDEN_UNITS: usize = 4;
const MODEL_VERSION: u32 = 1;
const MAX_ATTEMPTS: usize = 10;
const LAMBDA_MAX: f64 = 1e10;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    #[default]
    Sigmoid,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub version: u32,
    /// `[inputs, hidden, 1]`.
    pub layer_sizes: [usize; 3],
    /// `hidden_weights[j][i]` connects input `i` to hidden unit `j`.
    pub hidden_weights: Vec<Vec<f64>>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    pub output: OutputActivation,
}

/// Network with [`HIDDEN_UNITS`] hidden units; weights and biases are drawn
/// uniformly from `[-r, r]`, `r = sqrt(6 / (fan_in + fan_out))` per layer.
pub fn init_network(d_in: usize, seed: u64) -> Result<MlpModel> {
    init_network_with(d_in, HIDDEN_UNITS, OutputActivation::Sigmoid, seed)
}

pub fn init_network_with(d_in: usize, hidden: usize, output: OutputActivation, seed: u64) -> Result<MlpModel> {
    if d_in == 0 || hidden == 0 {
        return Err(Error::Argument("network needs at least one input and one hidden unit".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r1 = (6.0 / (d_in + hidden) as f64).sqrt();
    let r2 = (6.0 / (hidden + 1) as f64).sqrt();
    // biases share their layer's range
    let hidden_weights = (0..hidden)
        .map(|_| (0..d_in).map(|_| rng.random_range(-r1..=r1)).collect())
        .collect();
    let hidden_bias = (0..hidden).map(|_| rng.random_range(-r1..=r1)).collect();
    let output_weights = (0..hidden).map(|_| rng.random_range(-r2..=r2)).collect();
    let output_bias = rng.random_range(-r2..=r2);
    Ok(MlpModel {
        version: MODEL_VERSION,
        layer_sizes: [d_in, hidden, 1],
        hidden_weights,
        hidden_bias,
        output_weights,
        output_bias,
        output,
    })
}

impl MlpModel {
    pub fn inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn hidden(&self) -> usize {
        self.layer_sizes[1]
    }

    pub fn num_params(&self) -> usize {
        self.hidden() * (self.inputs() + 2) + 1
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        for row in &self.hidden_weights {
            p.extend_from_slice(row);
        }
        p.extend_from_slice(&self.hidden_bias);
        p.extend_from_slice(&self.output_weights);
        p.push(self.output_bias);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::Dimension(format!(
                "{} parameters for a network with {}",
                p.len(),
                self.num_params()
            )));
        }
        let (d, h) = (self.inputs(), self.hidden());
        for (j, row) in self.hidden_weights.iter_mut().enumerate() {
            row.copy_from_slice(&p[j * d..(j + 1) * d]);
        }
        let o = h * d;
        self.hidden_bias.copy_from_slice(&p[o..o + h]);
        self.output_weights.copy_from_slice(&p[o + h..o + 2 * h]);
        self.output_bias = p[o + 2 * h];
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.inputs() {
            return Err(Error::Dimension(format!(
                "network expects {} inputs, got {}",
                self.inputs(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Hidden activations and output.
    fn activations(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let h: Vec<f64> = self
            .hidden_weights
            .iter()
            .zip(&self.hidden_bias)
            .map(|(w, b)| sigmoid(w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b))
            .collect();
        let z = h.iter().zip(&self.output_weights).map(|(h, w)| h * w).sum::<f64>() + self.output_bias;
        let out = match self.output {
            OutputActivation::Sigmoid => sigmoid(z),
            OutputActivation::Linear => z,
        };
        (h, out)
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.activations(x).1)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: MlpModel = serde_json::from_str(&text)?;
        if m.version != MODEL_VERSION {
            return Err(Error::Data(format!("unsupported network version {}", m.version)));
        }
        Ok(m)
    }
}

pub fn forward(model: &MlpModel, x: &[f64]) -> Result<f64> {
    model.forward(x)
}

pub fn predict_mlp(model: &MlpModel, x: &[f64]) -> Result<f64> {
    model.forward(x)
}

/// Gradient of the network output with respect to every parameter.
fn output_gradient(model: &MlpModel, x: &[f64], out: &mut [f64]) -> f64 {
    let (d, h) = (model.inputs(), model.hidden());
    let (hid, y) = model.activations(x);
    let dout = match model.output {
        OutputActivation::Sigmoid => y * (1.0 - y),
        OutputActivation::Linear => 1.0,
    };
    let o = h * d;
    for j in 0..h {
        let dh = dout * model.output_weights[j] * hid[j] * (1.0 - hid[j]);
        let row = &mut out[j * d..(j + 1) * d];
        for (g, xi) in row.iter_mut().zip(x) {
            *g = dh * xi;
        }
        out[o + j] = dh;
        out[o + h + j] = dout * hid[j];
    }
    out[o + 2 * h] = dout;
    y
}

/// Residuals `yhat_k - y_k` and Jacobian `J[k][p] = d r_k / d w_p`.
pub fn residual_jacobian(model: &MlpModel, x: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (r, jt) = residual_jacobian_t(model, x, y)?;
    Ok((r, jt.transpose()))
}

/// Same as [`residual_jacobian`] but returns the transposed Jacobian
/// (parameters x samples), which is how training consumes it.
fn residual_jacobian_t(model: &MlpModel, x: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("{} rows for {} targets", x.len(), y.len())));
    }
    let p = model.num_params();
    let mut jt = DMatrix::zeros(p, x.len());
    let mut r = Vec::with_capacity(x.len());
    for (k, (row, target)) in x.iter().zip(y).enumerate() {
        model.check_input(row)?;
        let yhat = output_gradient(model, row, jt.column_mut(k).as_mut_slice());
        r.push(yhat - target);
    }
    Ok((r, jt))
}

fn sse(model: &MlpModel, x: &[Vec<f64>], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(row, t)| {
            let e = model.activations(row).1 - t;
            e * e
        })
        .sum()
}

fn mse_of(model: &MlpModel, part: &Split<'_>) -> f64 {
    sse(model, part.x, part.y) / part.y.len() as f64
}

/// Matrix added to `J'J`, scaled by lambda.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Damping {
    /// `lambda I`: plain gradient descent far from a minimum.
    #[default]
    Identity,
    /// `lambda diag(J'J)`; a near-zero diagonal (saturated unit) gets almost
    /// no damping.
    Marquardt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub damping: Damping,
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub max_epochs: usize,
    /// Consecutive validation increases that trigger early stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            damping: Damping::Identity,
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 10.0,
            max_epochs: 1000,
            patience: 6,
            seed: 0,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0)
            || !(self.lambda_up > 1.0)
            || !(self.lambda_down > 1.0)
            || self.max_epochs == 0
            || self.patience == 0
        {
            return Err(Error::Argument(format!("invalid LM config {self:?}")));
        }
        Ok(())
    }
}

/// Borrowed rows and targets of one data split.
#[derive(Debug, Clone, Copy)]
pub struct Split<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [f64],
}

impl<'a> Split<'a> {
    pub fn new(x: &'a [Vec<f64>], y: &'a [f64]) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
    Converged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub test_mse: Option<f64>,
    pub lambda: f64,
    /// Whether this epoch's LM step was accepted.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Training and validation MSE of the initial weights.
    pub initial_train_mse: f64,
    pub initial_val_mse: f64,
    pub epochs: Vec<EpochRecord>,
    /// Epoch number (1-based) whose weights were returned.
    pub best_epoch: usize,
    pub stop_reason: StopReason,
}

impl TrainHistory {
    /// `epoch,train_mse,val_mse,test_mse` rows, one per epoch.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_mse,val_mse,test_mse\n");
        for e in &self.epochs {
            let test = e.test_mse.map(|t| format!("{t:e}")).unwrap_or_default();
            let _ = writeln!(s, "{},{:e},{:e},{}", e.epoch, e.train_mse, e.val_mse, test);
        }
        s
    }
}

/// Stops once the validation error has risen `patience` epochs in a row.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    previous: Option<f64>,
    increases: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            previous: None,
            increases: 0,
        }
    }

    /// Feeds one epoch's validation error; returns true when training should stop.
    pub fn observe(&mut self, val: f64) -> bool {
        if let Some(prev) = self.previous {
            if val > prev {
                self.increases += 1;
            } else {
                self.increases = 0;
            }
        }
        self.previous = Some(val);
        self.increases >= self.patience
    }
}

/// Damped Gauss-Newton step solver for one Jacobian.
enum StepSystem {
    /// `J'J` and the gradient `J'r`, for `P <= m`.
    Params {
        jtj: DMatrix<f64>,
        grad: DVector<f64>,
        diag: DVector<f64>,
    },
    /// `J_s J_s'` with `J_s = J diag(d)^(-1/2)`, for `P > m`.
    Samples {
        jts: DMatrix<f64>,
        gram: DMatrix<f64>,
        inv_scale: DVector<f64>,
        r: DVector<f64>,
    },
}

fn damping_diag(jt: &DMatrix<f64>, damping: Damping) -> Vec<f64> {
    if damping == Damping::Identity {
        return vec![1.0; jt.nrows()];
    }
    let diag: Vec<f64> = jt.row_iter().map(|row| row.norm_squared()).collect();
    let floor = 1e-12 * diag.iter().cloned().fold(1.0, f64::max);
    diag.into_iter().map(|d| d.max(floor)).collect()
}

impl StepSystem {
    fn new(jt: DMatrix<f64>, r: &[f64], damping: Damping) -> Self {
        let (p, m) = jt.shape();
        let r = DVector::from_column_slice(r);
        if p <= m {
            let grad = &jt * &r;
            let jtj = &jt * jt.transpose();
            let diag = DVector::from_vec(damping_diag(&jt, damping));
            StepSystem::Params { jtj, grad, diag }
        } else {
            let diag = damping_diag(&jt, damping);
            let inv_scale = DVector::from_iterator(p, diag.iter().map(|d| 1.0 / d.sqrt()));
            let mut jts = jt;
            for (mut row, s) in jts.row_iter_mut().zip(inv_scale.iter()) {
                row *= *s;
            }
            let gram = jts.transpose() * &jts;
            StepSystem::Samples {
                jts,
                gram,
                inv_scale,
                r,
            }
        }
    }

    fn solve(&self, lambda: f64) -> Option<DVector<f64>> {
        match self {
            StepSystem::Params { jtj, grad, diag } => {
                let mut a = jtj.clone();
                for i in 0..a.nrows() {
                    a[(i, i)] += lambda * diag[i];
                }
                let chol = a.cholesky()?;
                Some(-chol.solve(grad))
            }
            StepSystem::Samples {
                jts,
                gram,
                inv_scale,
                r,
            } => {
                let mut b = gram.clone();
                for i in 0..b.nrows() {
                    b[(i, i)] += lambda;
                }
                let chol = b.cholesky()?;
                let u = chol.solve(r);
                let scaled = jts * u;
                Some(-scaled.component_mul(inv_scale))
            }
        }
    }
}

/// Trains with LM and early stopping; returns the weights of the epoch with
/// the lowest validation MSE. `test`, when given, is only evaluated for the
/// history and never influences training.
pub fn train_lm(
    init: MlpModel,
    train: Split<'_>,
    val: Split<'_>,
    test: Option<Split<'_>>,
    cfg: &LmConfig,
) -> Result<(MlpModel, TrainHistory)> {
    cfg.validate()?;
    if train.y.is_empty() || val.y.is_empty() {
        return Err(Error::Data("LM training needs non-empty train and validation sets".into()));
    }
    if train.x.len() != train.y.len() || val.x.len() != val.y.len() {
        return Err(Error::Dimension("rows and targets differ in length".into()));
    }

    let mut model = init;
    let mut params = model.params();
    let mut current_sse = sse(&model, train.x, train.y);
    if !current_sse.is_finite() {
        return Err(Error::Training("initial training error is not finite".into()));
    }
    let initial_train = current_sse / train.y.len() as f64;
    let initial_val = mse_of(&model, &val);

    let mut lambda = cfg.lambda0;
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut epochs = Vec::new();
    let mut best: Option<(usize, f64, MlpModel)> = None;
    let mut stop_reason = StopReason::MaxEpochs;
    let mut trial = model.clone();

    for epoch in 1..=cfg.max_epochs {
        let (r, jt) = residual_jacobian_t(&model, train.x, train.y)?;
        let system = StepSystem::new(jt, &r, cfg.damping);

        let mut accepted = false;
        let mut solved_once = false;
        for _ in 0..MAX_ATTEMPTS {
            if let Some(delta) = system.solve(lambda) {
                solved_once = true;
                let candidate: Vec<f64> = params.iter().zip(delta.iter()).map(|(p, d)| p + d).collect();
                trial.set_params(&candidate)?;
                let trial_sse = sse(&trial, train.x, train.y);
                if trial_sse < current_sse {
                    params = candidate;
                    std::mem::swap(&mut model, &mut trial);
                    current_sse = trial_sse;
                    lambda /= cfg.lambda_down;
                    accepted = true;
                    break;
                }
            }
            lambda *= cfg.lambda_up;
            if lambda > LAMBDA_MAX {
                break;
            }
        }
        if !solved_once && lambda > LAMBDA_MAX {
            return Err(Error::Training(format!(
                "damped normal equations stayed singular up to lambda {lambda:e} at epoch {epoch}"
            )));
        }

        let val_mse = mse_of(&model, &val);
        epochs.push(EpochRecord {
            epoch,
            train_mse: current_sse / train.y.len() as f64,
            val_mse,
            test_mse: test.as_ref().map(|t| mse_of(&model, t)),
            lambda,
            accepted,
        });
        if best.as_ref().is_none_or(|(_, v, _)| val_mse < *v) {
            best = Some((epoch, val_mse, model.clone()));
        }

        if lambda > LAMBDA_MAX {
            stop_reason = StopReason::Converged;
            break;
        }
        if stopper.observe(val_mse) {
            stop_reason = StopReason::EarlyStop;
            break;
        }
    }

    let (best_epoch, _, best_model) = best.expect("at least one epoch runs");
    Ok((
        best_model,
        TrainHistory {
            initial_train_mse: initial_train,
            initial_val_mse: initial_val,
            epochs,
            best_epoch,
            stop_reason,
        },
    ))
}
