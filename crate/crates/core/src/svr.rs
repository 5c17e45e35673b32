//! ε-insensitive support vector regression trained with SMO.
//!
//! The dual over `beta_i = alpha_i - alpha*_i` is solved in its split form:
//! `2n` box-constrained variables `a = (alpha, alpha*)` with signs
//! `s = (+1.., -1..)`, minimizing `1/2 a'Qa + p'a` subject to `s'a = 0`,
//! `0 <= a <= C`, where `Q_tu = s_t s_u K(t, u)` and
//! `p = (eps - y, eps + y)`. Each iteration updates the maximal violating
//! pair; the whole Gram matrix is kept in memory.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    HistogramIntersection,
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Rbf { gamma } if !(*gamma > 0.0) => {
                Err(Error::Argument(format!("rbf gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    /// Kernel value without input checks.
    #[inline]
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            KernelSpec::HistogramIntersection => u.iter().zip(v).map(|(a, b)| a.min(*b)).sum(),
            KernelSpec::Linear => u.iter().zip(v).map(|(a, b)| a * b).sum(),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    fn check_inputs(&self, rows: &[Vec<f64>]) -> Result<()> {
        if let KernelSpec::HistogramIntersection = self {
            for (i, r) in rows.iter().enumerate() {
                if let Some(j) = r.iter().position(|v| *v < 0.0) {
                    return Err(Error::Domain(format!(
                        "histogram intersection needs non-negative inputs; row {i} column {j} is {}",
                        r[j]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `sum_i min(u_i, v_i)` for non-negative vectors.
pub fn hik_kernel(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension(format!("kernel inputs of length {} and {}", u.len(), v.len())));
    }
    if u.iter().chain(v).any(|x| *x < 0.0) {
        return Err(Error::Domain("histogram intersection of a negative entry".into()));
    }
    Ok(KernelSpec::HistogramIntersection.eval(u, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrConfig {
    pub c: f64,
    pub epsilon: f64,
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.01,
            tolerance: 1e-3,
            max_iterations: 10_000_000,
        }
    }
}

impl SvrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.epsilon >= 0.0) || !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::Argument(format!("invalid SVR config {self:?}")));
        }
        Ok(())
    }
}

/// Symmetric kernel matrix of a training set.
#[derive(Debug, Clone)]
pub struct Gram {
    n: usize,
    values: Vec<f64>,
}

impl Gram {
    pub fn compute(rows: &[Vec<f64>], kernel: &KernelSpec) -> Self {
        let n = rows.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = kernel.eval(&rows[i], &rows[j]);
                values[i * n + j] = k;
                values[j * n + i] = k;
            }
        }
        Self { n, values }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Gram matrix of the rows selected by `idx`.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let n = idx.len();
        let mut values = Vec::with_capacity(n * n);
        for &i in idx {
            for &j in idx {
                values.push(self.get(i, j));
            }
        }
        Self { n, values }
    }
}

const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub version: u32,
    pub kernel: KernelSpec,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i - alpha*_i` for each support vector, within `[-C, C]`.
    pub beta: Vec<f64>,
    pub bias: f64,
    pub config: SvrConfig,
    pub converged: bool,
    pub iterations: usize,
    /// Final dual objective.
    pub objective: f64,
}

impl SvrModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if let Some(sv) = self.support_vectors.first() {
            if sv.len() != x.len() {
                return Err(Error::Dimension(format!(
                    "model expects {} features, got {}",
                    sv.len(),
                    x.len()
                )));
            }
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.beta)
            .map(|(sv, b)| b * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: SvrModel = serde_json::from_str(&text)?;
        if m.version != MODEL_VERSION {
            return Err(Error::Data(format!("unsupported SVR model version {}", m.version)));
        }
        Ok(m)
    }
}

pub fn predict_svr(model: &SvrModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

/// Raw solver output over all training points.
#[derive(Debug, Clone)]
pub struct DualSolution {
    /// `beta_i` for every training point, zeros included.
    pub beta: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
    /// Dual objective sampled every `trace_every` iterations (empty if off).
    pub objective_trace: Vec<f64>,
}

const TAU: f64 = 1e-12;

/// Runs SMO on a precomputed Gram matrix.
pub fn solve_dual(gram: &Gram, y: &[f64], cfg: &SvrConfig, trace_every: Option<usize>) -> Result<DualSolution> {
    cfg.validate()?;
    let n = y.len();
    if gram.len() != n {
        return Err(Error::Dimension(format!("Gram of size {} for {n} targets", gram.len())));
    }
    if n < 2 {
        return Err(Error::Data(format!("SVR needs at least 2 samples, got {n}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite SVR target".into()));
    }

    let l = 2 * n;
    let c = cfg.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |t: usize, u: usize| sign(t) * sign(u) * gram.get(t % n, u % n);
    let p: Vec<f64> = (0..l)
        .map(|t| if t < n { cfg.epsilon - y[t] } else { cfg.epsilon + y[t - n] })
        .collect();

    let mut a = vec![0.0; l];
    let mut g = p.clone();
    let objective = |a: &[f64], g: &[f64]| -0.5 * a.iter().zip(g).zip(&p).map(|((a, g), p)| a * (g + p)).sum::<f64>();

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        if let Some(k) = trace_every {
            if iterations % k == 0 {
                trace.push(objective(&a, &g));
            }
        }
        // maximal violating pair
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..l {
            let s = sign(t);
            let v = -s * g[t];
            let up = if s > 0.0 { a[t] < c } else { a[t] > 0.0 };
            let low = if s > 0.0 { a[t] > 0.0 } else { a[t] < c };
            if up && v > gmax {
                gmax = v;
                i = t;
            }
            if low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < cfg.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (a[i], a[j]);
        let qii = gram.get(i % n, i % n);
        let qjj = gram.get(j % n, j % n);
        let qij = q(i, j);
        if sign(i) != sign(j) {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-g[i] - g[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (g[i] - g[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c {
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }

        let (di, dj) = (a[i] - old_i, a[j] - old_j);
        if di != 0.0 || dj != 0.0 {
            for t in 0..l {
                g[t] += q(i, t) * di + q(j, t) * dj;
            }
        }
    }

    // bias from free variables, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..l {
        let s = sign(t);
        let yg = s * g[t];
        if a[t] >= c {
            if s < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if a[t] <= 0.0 {
            if s > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };

    let beta = (0..n).map(|i| a[i] - a[i + n]).collect();
    Ok(DualSolution {
        beta,
        bias: -rho,
        converged,
        iterations,
        objective: objective(&a, &g),
        objective_trace: trace,
    })
}

fn check_rows(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("{} rows for {} targets", x.len(), y.len())));
    }
    let Some(first) = x.first() else {
        return Err(Error::Data("empty training set".into()));
    };
    for (i, r) in x.iter().enumerate() {
        if r.len() != first.len() {
            return Err(Error::Dimension(format!("row {i} has {} features, expected {}", r.len(), first.len())));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite feature in row {i}")));
        }
    }
    Ok(())
}

fn model_from(x: &[Vec<f64>], sol: &DualSolution, cfg: &SvrConfig, kernel: KernelSpec) -> SvrModel {
    let mut support_vectors = Vec::new();
    let mut beta = Vec::new();
    for (row, &b) in x.iter().zip(&sol.beta) {
        if b != 0.0 {
            support_vectors.push(row.clone());
            beta.push(b);
        }
    }
    SvrModel {
        version: MODEL_VERSION,
        kernel,
        support_vectors,
        beta,
        bias: sol.bias,
        config: *cfg,
        converged: sol.converged,
        iterations: sol.iterations,
        objective: sol.objective,
    }
}

/// Trains an ε-SVR. A run that hits `max_iterations` still returns a model,
/// with `converged == false`.
pub fn train_svr(x: &[Vec<f64>], y: &[f64], cfg: &SvrConfig, kernel: KernelSpec) -> Result<SvrModel> {
    check_rows(x, y)?;
    kernel.validate()?;
    kernel.check_inputs(x)?;
    let gram = Gram::compute(x, &kernel);
    train_svr_with_gram(x, y, &gram, cfg, kernel)
}

/// As [`train_svr`] but reusing a Gram matrix computed from `x`.
pub fn train_svr_with_gram(
    x: &[Vec<f64>],
    y: &[f64],
    gram: &Gram,
    cfg: &SvrConfig,
    kernel: KernelSpec,
) -> Result<SvrModel> {
    check_rows(x, y)?;
    let sol = solve_dual(gram, y, cfg, None)?;
    Ok(model_from(x, &sol, cfg, kernel))
}

/// The `(C, epsilon)` grid searched when no explicit values are configured.
pub const C_GRID: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 1000.0];
pub const EPSILON_GRID: [f64; 3] = [0.001, 0.01, 0.05];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub epsilon: f64,
    pub val_mse: f64,
    pub converged: bool,
}

/// Trains one model per `(C, epsilon)` pair on `fit` rows and scores it on
/// `val` rows. Returns all scores and the index of the lowest validation MSE
/// (first one wins ties). Both index sets refer to rows of `x` / `gram`.
#[allow(clippy::too_many_arguments)]
pub fn grid_search(
    x: &[Vec<f64>],
    y: &[f64],
    gram: &Gram,
    fit: &[usize],
    val: &[usize],
    base: &SvrConfig,
    kernel: KernelSpec,
    c_grid: &[f64],
    eps_grid: &[f64],
) -> Result<(Vec<GridPoint>, usize)> {
    if fit.is_empty() || val.is_empty() || c_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::Argument("grid search needs non-empty parts and grids".into()));
    }
    let fit_x: Vec<Vec<f64>> = fit.iter().map(|&i| x[i].clone()).collect();
    let fit_y: Vec<f64> = fit.iter().map(|&i| y[i]).collect();
    let fit_gram = gram.subset(fit);

    let mut points = Vec::new();
    let mut best = 0;
    for &c in c_grid {
        for &epsilon in eps_grid {
            let cfg = SvrConfig { c, epsilon, ..*base };
            let model = train_svr_with_gram(&fit_x, &fit_y, &fit_gram, &cfg, kernel)?;
            let mut sse = 0.0;
            for &i in val {
                let e = model.predict(&x[i])? - y[i];
                sse += e * e;
            }
            let val_mse = sse / val.len() as f64;
            if val_mse < points.get(best).map_or(f64::INFINITY, |p: &GridPoint| p.val_mse) {
                best = points.len();
            }
            points.push(GridPoint {
                c,
                epsilon,
                val_mse,
                converged: model.converged,
            });
        }
    }
    Ok((points, best))
}
