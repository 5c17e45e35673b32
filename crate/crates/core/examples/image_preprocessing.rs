//! Histogram equalization and constant-time box sums on an image.
//!
//! cargo run --release --example image_preprocessing -- [image]

use houseprice::imgproc::{equalize_histogram, integral_image, GrayImage};

fn main() -> houseprice::Result<()> {
    let img = match std::env::args().nth(1) {
        Some(p) => GrayImage::open(p.as_ref())?,
        // low-contrast gradient
        None => GrayImage::from_fn(160, 120, |x, y| (100 + (x + y) / 10) as u8)?,
    };
    let range = |g: &GrayImage| (g.data().iter().min().copied(), g.data().iter().max().copied());
    let eq = equalize_histogram(&img);
    println!("{}x{} image, gray range {:?} -> {:?} after equalization", img.width(), img.height(), range(&img), range(&eq));

    let ii = integral_image(&eq);
    let (w, h) = (eq.width() - 1, eq.height() - 1);
    let total = ii.box_sum(0, 0, w, h)?;
    let centre = ii.box_sum(w / 4, h / 4, 3 * w / 4, 3 * h / 4)?;
    println!("sum over the image {total}, over the central quarter {centre}");
    Ok(())
}
