//! Textual-only benchmark: the 4-unit network on the 506x13 housing table,
//! 70/15/15 splits, five seeds.
//!
//! cargo run --release --example boston_benchmark -- [csv]

use std::path::PathBuf;

use houseprice::pipeline::{median, train_eval, Estimator, RunConfig, Source};

fn main() -> houseprice::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/boston_housing.csv"));
    let cfg = RunConfig::default();
    let source = Source::load(&path, None, &cfg)?;
    let mut rs = Vec::new();
    for &seed in &cfg.seeds {
        let o = train_eval(&source, Estimator::Nn, 0, seed, &cfg)?;
        let h = o.history.as_ref().expect("nn history");
        let r = o.report.test_normalized.r_value.unwrap_or(f64::NAN);
        println!(
            "seed {seed}: test R {r:.4}, test MSE {:.5}, best epoch {} of {} ({:?})",
            o.report.test_normalized.mse,
            h.best_epoch,
            h.epochs.len(),
            h.stop_reason
        );
        rs.push(r);
    }
    println!("median test R over {} seeds: {:.4}", rs.len(), median(&rs).unwrap_or(f64::NAN));
    Ok(())
}
