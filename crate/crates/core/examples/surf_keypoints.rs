//! Detects and describes SURF interest points.
//!
//! cargo run --release --example surf_keypoints -- [image] [threshold]

use houseprice::imgproc::{equalize_histogram, integral_image, GrayImage};
use houseprice::surf::{extract, strongest_n, SurfParams};

fn main() -> houseprice::Result<()> {
    let mut args = std::env::args().skip(1);
    let img = match args.next() {
        Some(p) => equalize_histogram(&GrayImage::open(p.as_ref())?),
        None => GrayImage::from_fn(200, 200, |x, y| {
            let blob = |cx: f64, cy: f64, s: f64| (-((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / (2.0 * s * s)).exp();
            (128.0 - 100.0 * blob(70.0, 80.0, 4.0) + 90.0 * blob(130.0, 120.0, 6.0)).round() as u8
        })?,
    };
    let params = SurfParams {
        hessian_threshold: args.next().map_or(10.0, |t| t.parse().expect("threshold")),
        ..SurfParams::default()
    };
    let ex = extract(&integral_image(&img), &params)?;
    println!(
        "{} points described ({} too close to the border, {} degenerate)",
        ex.points.len(),
        ex.dropped_out_of_bounds,
        ex.dropped_degenerate
    );
    for p in strongest_n(&ex.points, 5) {
        println!(
            "({:6.1}, {:6.1}) scale {:5.2} response {:10.1} orientation {:+.3} sign {:+}",
            p.x, p.y, p.scale, p.response, p.orientation, p.laplacian_sign
        );
    }
    Ok(())
}
