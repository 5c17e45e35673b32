//! Regression metrics: MSE, SSE, SST, R² and the Pearson R-value.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Units the predictions and targets were expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Normalized,
    Usd,
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scale::Normalized => "normalized",
            Scale::Usd => "usd",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mse: f64,
    pub sse: f64,
    pub sst: f64,
    /// `None` when the targets are constant.
    pub r_squared: Option<f64>,
    /// `None` when either series has zero variance.
    pub r_value: Option<f64>,
    pub n: usize,
    pub scale: Scale,
}

fn check(yhat: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if yhat.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} targets",
            yhat.len(),
            y.len()
        )));
    }
    if y.len() < min_len {
        return Err(Error::Dimension(format!(
            "need at least {min_len} samples, got {}",
            y.len()
        )));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sse(yhat: &[f64], y: &[f64]) -> Result<f64> {
    check(yhat, y, 1)?;
    Ok(yhat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub fn sst(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Dimension("empty target vector".into()));
    }
    let m = mean(y);
    Ok(y.iter().map(|v| (m - v) * (m - v)).sum())
}

pub fn mse(yhat: &[f64], y: &[f64]) -> Result<f64> {
    Ok(sse(yhat, y)? / y.len() as f64)
}

/// `1 - SSE/SST`; negative for predictors worse than the mean.
pub fn r_squared(yhat: &[f64], y: &[f64]) -> Result<f64> {
    check(yhat, y, 2)?;
    let total = sst(y)?;
    if total == 0.0 {
        return Err(Error::Undefined("R² with constant targets (SST = 0)".into()));
    }
    Ok(1.0 - sse(yhat, y)? / total)
}

/// Pearson correlation between predictions and targets.
pub fn r_value(yhat: &[f64], y: &[f64]) -> Result<f64> {
    check(yhat, y, 2)?;
    let (mp, mt) = (mean(yhat), mean(y));
    let mut cov = 0.0;
    let mut vp = 0.0;
    let mut vt = 0.0;
    for (p, t) in yhat.iter().zip(y) {
        let (dp, dt) = (p - mp, t - mt);
        cov += dp * dt;
        vp += dp * dp;
        vt += dt * dt;
    }
    if vp == 0.0 || vt == 0.0 {
        return Err(Error::Undefined("correlation with a zero-variance series".into()));
    }
    Ok((cov / (vp.sqrt() * vt.sqrt())).clamp(-1.0, 1.0))
}

pub fn evaluate(yhat: &[f64], y: &[f64], scale: Scale) -> Result<EvalReport> {
    let sse = sse(yhat, y)?;
    let sst = sst(y)?;
    Ok(EvalReport {
        mse: sse / y.len() as f64,
        sse,
        sst,
        r_squared: if sst > 0.0 && y.len() >= 2 {
            Some(1.0 - sse / sst)
        } else {
            None
        },
        r_value: r_value(yhat, y).ok(),
        n: y.len(),
        scale,
    })
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "scale,n,mse,sse,sst,r_squared,r_value";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{},{},{:e},{:e},{:e},{},{}",
            self.scale,
            self.n,
            self.mse,
            self.sse,
            self.sst,
            opt(self.r_squared),
            opt(self.r_value)
        )
    }

    /// Appends one row to `path`, writing the header first if the file is new.
    pub fn append_csv(&self, path: &Path) -> Result<()> {
        let exists = path.exists();
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let mut text = String::new();
        if !exists {
            text.push_str(Self::CSV_HEADER);
            text.push('\n');
        }
        text.push_str(&self.csv_row());
        text.push('\n');
        f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }
}
