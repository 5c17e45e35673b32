//! Full feature-count sweep on a generated image+price dataset.
//!
//! cargo run --release --example synthetic_sweep -- [out_dir] [houses]

use std::path::PathBuf;

use houseprice::data::load_houses_dataset;
use houseprice::fusion::MAX_FEATURES;
use houseprice::pipeline::{calibrate_houses, run_sweep, write_report, write_rows, RunConfig, Source, SWEEP_FILE};
use houseprice::synthetic::{generate_houses_dataset, SyntheticSpec};

fn main() -> houseprice::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synthetic_sweep".into()));
    let mut spec = SyntheticSpec::default();
    if let Some(n) = args.next() {
        spec.houses = n.parse().expect("house count");
    }
    let root = out.join("houses");
    generate_houses_dataset(&root, &spec)?;

    let mut cfg = RunConfig::default();
    let houses = load_houses_dataset(&root)?;
    cfg.hessian_threshold = calibrate_houses(&houses, &cfg.surf_params(), MAX_FEATURES, 400)?;
    println!("calibrated hessian threshold {:.2}", cfg.hessian_threshold);

    let source = Source::load(&root, Some(&out.join("cache")), &cfg)?;
    let rows = run_sweep(&source, &cfg);
    write_rows(&out.join(SWEEP_FILE), &rows)?;
    let (summary, trend) = write_report(&out, &rows)?;
    for s in &summary {
        println!(
            "{:>3} n={:>2} mse={:.6} r={:.4}",
            s.estimator.as_str(),
            s.n,
            s.test_mse_norm.unwrap_or(f64::NAN),
            s.r_value.unwrap_or(f64::NAN)
        );
    }
    println!("images help: {:?}, nn beats svr: {:?}", trend.images_help(), trend.nn_beats_svr());
    Ok(())
}
