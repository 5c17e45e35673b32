//! Levenberg-Marquardt training of the 4-unit network on XOR.
//!
//! cargo run --release --example mlp_xor -- [seed]

use houseprice::mlp::{init_network, train_lm, LmConfig, Split};

fn main() -> houseprice::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
    let y = vec![0.1, 0.9, 0.9, 0.1];
    let cfg = LmConfig {
        max_epochs: 200,
        patience: 200,
        seed,
        ..LmConfig::default()
    };
    let (model, history) = train_lm(init_network(2, seed)?, Split::new(&x, &y), Split::new(&x, &y), None, &cfg)?;
    for e in history.epochs.iter().take(12) {
        println!("epoch {:3}  mse {:.3e}  lambda {:.0e}  {}", e.epoch, e.train_mse, e.lambda, if e.accepted { "" } else { "rejected" });
    }
    println!("stopped after {} epochs: {:?}", history.epochs.len(), history.stop_reason);
    for (r, t) in x.iter().zip(&y) {
        println!("{r:?} -> {:.4} (target {t})", model.forward(r)?);
    }
    Ok(())
}
