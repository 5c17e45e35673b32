//! Writes a synthetic houses dataset (images + HousesInfo.txt).
//!
//! cargo run --release --example synthetic_dataset -- /tmp/houses [houses] [seed]

use std::path::PathBuf;

use houseprice::synthetic::{generate_houses_dataset, SyntheticSpec};

fn main() -> houseprice::Result<()> {
    let mut args = std::env::args().skip(1);
    let root = PathBuf::from(args.next().unwrap_or_else(|| "synthetic_houses".into()));
    let mut spec = SyntheticSpec::default();
    if let Some(n) = args.next() {
        spec.houses = n.parse().expect("house count");
    }
    if let Some(s) = args.next() {
        spec.seed = s.parse().expect("seed");
    }
    let houses = generate_houses_dataset(&root, &spec)?;
    let mean = houses.iter().map(|h| h.price).sum::<f64>() / houses.len() as f64;
    println!("wrote {} houses to {} (mean price {mean:.0})", houses.len(), root.display());
    Ok(())
}
