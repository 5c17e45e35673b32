use std::path::Path;

use plotters::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Estimator, RunConfig};
use super::run::{train_eval, Source};
use crate::error::{Error, Result};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SUMMARY_FILE: &str = "sweep_summary.csv";

/// One (estimator, n, seed) sweep point. Failed points keep empty metrics
/// and carry the error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub estimator: Estimator,
    pub n: usize,
    pub seed: u64,
    pub train_mse_norm: Option<f64>,
    pub test_mse_norm: Option<f64>,
    pub test_mse_usd: Option<f64>,
    pub r_squared: Option<f64>,
    pub r_value: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

/// Runs every configured point. Points are independent and run in parallel;
/// rows come back ordered by estimator, n, seed.
pub fn run_sweep(source: &Source, cfg: &RunConfig) -> Vec<SweepRow> {
    let mut points = Vec::new();
    for &e in &cfg.estimators {
        for &n in &cfg.n_values {
            for &s in &cfg.seeds {
                points.push((e, n, s));
            }
        }
    }
    points.sort();
    points.dedup();
    points
        .par_iter()
        .map(|&(estimator, n, seed)| match train_eval(source, estimator, n, seed, cfg) {
            Ok(o) => {
                let r = o.report;
                SweepRow {
                    estimator,
                    n,
                    seed,
                    train_mse_norm: Some(r.train_mse_norm),
                    test_mse_norm: Some(r.test_normalized.mse),
                    test_mse_usd: Some(r.test_usd.mse),
                    r_squared: r.test_normalized.r_squared,
                    r_value: r.test_normalized.r_value,
                    converged: r.converged,
                    error: None,
                }
            }
            Err(e) => SweepRow {
                estimator,
                n,
                seed,
                train_mse_norm: None,
                test_mse_norm: None,
                test_mse_usd: None,
                r_squared: None,
                r_value: None,
                converged: false,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Median of the finite values; `None` when there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Median over seeds of one (estimator, n) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: Estimator,
    pub n: usize,
    pub runs: usize,
    pub failures: usize,
    pub train_mse_norm: Option<f64>,
    pub test_mse_norm: Option<f64>,
    pub test_mse_usd: Option<f64>,
    pub r_squared: Option<f64>,
    pub r_value: Option<f64>,
}

pub fn aggregate(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Estimator, usize)> = rows.iter().map(|r| (r.estimator, r.n)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(estimator, n)| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.estimator == estimator && r.n == n).collect();
            let col = |f: fn(&SweepRow) -> Option<f64>| median(&group.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                estimator,
                n,
                runs: group.len(),
                failures: group.iter().filter(|r| r.error.is_some()).count(),
                train_mse_norm: col(|r| r.train_mse_norm),
                test_mse_norm: col(|r| r.test_mse_norm),
                test_mse_usd: col(|r| r.test_mse_usd),
                r_squared: col(|r| r.r_squared),
                r_value: col(|r| r.r_value),
            }
        })
        .collect()
}

/// Headline comparison drawn from a summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub nn_r_textual: Option<f64>,
    /// Best median NN R over n >= 1, with its n.
    pub nn_best_r: Option<(usize, f64)>,
    pub nn_best_mse: Option<(usize, f64)>,
    pub svr_best_mse: Option<(usize, f64)>,
}

impl Trend {
    pub fn from_summary(summary: &[SummaryRow]) -> Self {
        let best = |e: Estimator, f: fn(&SummaryRow) -> Option<f64>, min_n: usize, larger: bool| {
            summary
                .iter()
                .filter(|s| s.estimator == e && s.n >= min_n)
                .filter_map(|s| f(s).map(|v| (s.n, v)))
                .fold(None, |acc: Option<(usize, f64)>, (n, v)| match acc {
                    Some((_, b)) if (larger && v <= b) || (!larger && v >= b) => acc,
                    _ => Some((n, v)),
                })
        };
        Self {
            nn_r_textual: summary
                .iter()
                .find(|s| s.estimator == Estimator::Nn && s.n == 0)
                .and_then(|s| s.r_value),
            nn_best_r: best(Estimator::Nn, |s| s.r_value, 1, true),
            nn_best_mse: best(Estimator::Nn, |s| s.test_mse_norm, 0, false),
            svr_best_mse: best(Estimator::Svr, |s| s.test_mse_norm, 0, false),
        }
    }

    /// Visual features raise the NN R-value above the textual-only baseline.
    pub fn images_help(&self) -> Option<bool> {
        Some(self.nn_best_r?.1 > self.nn_r_textual?)
    }

    /// The network's best test MSE beats the SVR's best.
    pub fn nn_beats_svr(&self) -> Option<bool> {
        Some(self.nn_best_mse?.1 < self.svr_best_mse?.1)
    }
}

fn line_chart(path: &Path, title: &str, y_label: &str, summary: &[SummaryRow], f: fn(&SummaryRow) -> Option<f64>) -> Result<()> {
    let series: Vec<(Estimator, Vec<(f64, f64)>)> = [Estimator::Svr, Estimator::Nn]
        .into_iter()
        .map(|e| {
            let pts = summary
                .iter()
                .filter(|s| s.estimator == e)
                .filter_map(|s| f(s).map(|v| (s.n as f64, v)))
                .collect();
            (e, pts)
        })
        .filter(|(_, p): &(Estimator, Vec<(f64, f64)>)| !p.is_empty())
        .collect();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let x_max = all.iter().map(|p| p.0).fold(1.0, f64::max);
    let (mut y_lo, mut y_hi) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (0.0, 1.0);
    }
    let pad = ((y_hi - y_lo) * 0.05).max(1e-9);

    let draw = || -> std::result::Result<(), Box<dyn std::error::Error>> {
        let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(0.0..x_max, (y_lo - pad)..(y_hi + pad))?;
        chart
            .configure_mesh()
            .x_desc("visual features per image (n)")
            .y_desc(y_label)
            .draw()?;
        for (e, pts) in &series {
            let color = match e {
                Estimator::Svr => BLUE,
                Estimator::Nn => RED,
            };
            chart
                .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))?
                .label(e.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color));
            chart.draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))?;
        }
        chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw()?;
        root.present()?;
        Ok(())
    };
    draw().map_err(|e| Error::Data(format!("cannot draw {}: {e}", path.display())))
}

/// Writes `sweep_summary.csv`, `mse_vs_n.svg` and `r_vs_n.svg` next to the rows.
pub fn write_report(out: &Path, rows: &[SweepRow]) -> Result<(Vec<SummaryRow>, Trend)> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let summary = aggregate(rows);
    write_rows(&out.join(SUMMARY_FILE), &summary)?;
    line_chart(
        &out.join("mse_vs_n.svg"),
        "Median test MSE (normalized) vs n",
        "MSE",
        &summary,
        |s| s.test_mse_norm,
    )?;
    line_chart(&out.join("r_vs_n.svg"), "Median test R vs n", "R", &summary, |s| s.r_value)?;
    let trend = Trend::from_summary(&summary);
    std::fs::write(out.join("trend.json"), serde_json::to_string_pretty(&trend)?)
        .map_err(|e| Error::io(out.join("trend.json"), e))?;
    Ok((summary, trend))
}
