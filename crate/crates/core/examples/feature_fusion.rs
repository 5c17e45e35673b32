//! Fuses textual attributes with the strongest descriptors of each photo
//! and min-max scales the result.
//!
//! cargo run --release --example feature_fusion

use houseprice::data::load_houses_dataset;
use houseprice::fusion::{assemble, Normalizer};
use houseprice::pipeline::extract_houses;
use houseprice::surf::SurfParams;
use houseprice::synthetic::{generate_houses_dataset, SyntheticSpec};

fn main() -> houseprice::Result<()> {
    let dir = std::env::temp_dir().join("houseprice_fusion_example");
    let spec = SyntheticSpec {
        houses: 8,
        image_size: 128,
        ..SyntheticSpec::default()
    };
    generate_houses_dataset(&dir, &spec)?;
    let params = SurfParams {
        hessian_threshold: 50.0,
        ..SurfParams::default()
    };
    let features = extract_houses(load_houses_dataset(&dir)?, &params, None)?;
    let n = 3;
    let rows: Vec<Vec<f64>> = features
        .houses
        .iter()
        .map(|h| assemble(h, &features.descriptors[&h.id], n).map(|v| v.values))
        .collect::<houseprice::Result<_>>()?;
    let norm = Normalizer::fit(&rows)?;
    let z = norm.transform(&rows[0])?;
    println!("{} houses, {} values per house with n = {n}", rows.len(), rows[0].len());
    println!("house {} textual part raw {:?} -> scaled {:?}", features.houses[0].id, &rows[0][..4], &z[..4]);
    let prices: Vec<f64> = features.houses.iter().map(|h| h.price).collect();
    let target = Normalizer::fit_column(&prices)?;
    println!("price range {:.0}..{:.0}; 0.5 maps back to {:.0}", target.min[0], target.max[0], target.denormalize_target(0.5)?);
    Ok(())
}
