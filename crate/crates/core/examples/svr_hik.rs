//! epsilon-SVR with the histogram intersection kernel, with and without
//! the built-in (C, epsilon) grid search.
//!
//! cargo run --release --example svr_hik

use houseprice::metrics::{mse, r_value};
use houseprice::svr::{grid_search, train_svr, Gram, KernelSpec, SvrConfig, C_GRID, EPSILON_GRID};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> houseprice::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut draw = |n: usize| -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..6).map(|_| rng.random::<f64>()).collect()).collect();
        let y = x.iter().map(|r| 0.5 * r[0].min(r[1]) + 0.3 * r[2] * r[3] + 0.1 * r[5]).collect();
        (x, y)
    };
    let (x, y) = draw(200);
    let (xt, yt) = draw(100);
    let kernel = KernelSpec::HistogramIntersection;

    let fixed = train_svr(&x, &y, &SvrConfig::default(), kernel)?;
    let pred: Vec<f64> = xt.iter().map(|r| fixed.predict(r)).collect::<houseprice::Result<_>>()?;
    println!(
        "C=1 eps=0.01: {} support vectors, {} SMO iterations, test MSE {:.5}, R {:.4}",
        fixed.support_vectors.len(),
        fixed.iterations,
        mse(&pred, &yt)?,
        r_value(&pred, &yt)?
    );

    let gram = Gram::compute(&x, &kernel);
    let fit: Vec<usize> = (0..160).collect();
    let val: Vec<usize> = (160..200).collect();
    let (points, best) = grid_search(&x, &y, &gram, &fit, &val, &SvrConfig::default(), kernel, &C_GRID, &EPSILON_GRID)?;
    let b = &points[best];
    println!("grid search picked C={} eps={} (validation MSE {:.5})", b.c, b.epsilon, b.val_mse);
    Ok(())
}
