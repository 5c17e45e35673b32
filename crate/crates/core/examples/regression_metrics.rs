//! MSE, R^2 and R on a small prediction table.
//!
//! cargo run --release --example regression_metrics

use houseprice::metrics::{evaluate, Scale};

fn main() -> houseprice::Result<()> {
    let y = [1.0, 2.0, 3.0, 4.0, 5.0];
    for (name, p) in [
        ("perfect", vec![1.0, 2.0, 3.0, 4.0, 5.0]),
        ("mean", vec![3.0; 5]),
        ("noisy", vec![1.2, 1.7, 3.4, 3.9, 5.3]),
        ("shifted", vec![2.0, 3.0, 4.0, 5.0, 6.0]),
    ] {
        let r = evaluate(&p, &y, Scale::Normalized)?;
        let fmt = |v: Option<f64>| v.map_or("undefined".into(), |v| format!("{v:.4}"));
        println!("{name:>8}: mse {:.4}  R^2 {}  R {}", r.mse, fmt(r.r_squared), fmt(r.r_value));
    }
    Ok(())
}
