//! Grayscale rasters, global histogram equalization and summed-area tables.
//!
//! Everything here works on already-decoded 8-bit rasters. File decoding sits
//! behind [`GrayImage::open`], which is the only place the `image` crate is
//! touched, so the decoder can be swapped without affecting the rest.

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 8-bit single-channel raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Image where every pixel has value `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Decodes an image file (PNG or JPEG) and converts it to grayscale.
    pub fn open(path: &Path) -> Result<Self> {
        let decoded = image::open(path).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let rgb = decoded.to_rgb8();
        let (w, h) = rgb.dimensions();
        to_grayscale(w as usize, h as usize, rgb.as_raw())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Per-intensity pixel counts.
    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &v in &self.data {
            hist[v as usize] += 1;
        }
        hist
    }
}

/// Converts an interleaved 8-bit RGB raster with ITU-R BT.601 luma weights.
pub fn to_grayscale(width: usize, height: usize, rgb: &[u8]) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(Error::Dimension(format!(
            "cannot convert empty {width}x{height} image"
        )));
    }
    if rgb.len() != width * height * 3 {
        return Err(Error::Dimension(format!(
            "{width}x{height} RGB image needs {} bytes, got {}",
            width * height * 3,
            rgb.len()
        )));
    }
    let data = rgb
        .chunks_exact(3)
        .map(|p| luma(p[0], p[1], p[2]))
        .collect();
    GrayImage::new(width, height, data)
}

#[inline]
fn luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// The lookup table used by [`equalize_histogram`] for this image.
pub fn equalization_map(img: &GrayImage) -> [u8; 256] {
    let hist = img.histogram();
    let total = img.data.len() as u64;
    let mut cdf = [0u64; 256];
    let mut acc = 0;
    for (c, h) in cdf.iter_mut().zip(hist.iter()) {
        acc += h;
        *c = acc;
    }
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    let denom = total - cdf_min;

    let mut map = [0u8; 256];
    for (v, m) in map.iter_mut().enumerate() {
        if cdf[v] < cdf_min {
            // unoccupied bins below the darkest pixel
            *m = 0;
        } else if denom == 0 {
            // single occupied bin
            *m = 255;
        } else {
            let scaled = (cdf[v] - cdf_min) as f64 / denom as f64 * 255.0;
            *m = scaled.round().clamp(0.0, 255.0) as u8;
        }
    }
    map
}

/// Global histogram equalization using the `cdf_min`-corrected mapping.
pub fn equalize_histogram(img: &GrayImage) -> GrayImage {
    let map = equalization_map(img);
    GrayImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&v| map[v as usize]).collect(),
    }
}

/// Summed-area table. Entry `(x, y)` holds the sum over `[0..=x] x [0..=y]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    data: Vec<u64>,
}

impl IntegralImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u64 {
        self.data[y * self.width + x]
    }

    /// Inclusive rectangle sum. Fails on inverted or out-of-range rectangles.
    pub fn box_sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<u64> {
        if x1 < x0 || y1 < y0 {
            return Err(Error::Argument(format!(
                "inverted rectangle ({x0},{y0})-({x1},{y1})"
            )));
        }
        if x1 >= self.width || y1 >= self.height {
            return Err(Error::Argument(format!(
                "rectangle ({x0},{y0})-({x1},{y1}) exceeds {}x{} image",
                self.width, self.height
            )));
        }
        Ok(self.sum_unchecked(x0, y0, x1, y1))
    }

    /// Sum over the part of the inclusive rectangle that lies inside the
    /// image; pixels beyond the border count as zero. Empty overlap gives 0.
    #[inline]
    pub fn box_sum_clipped(&self, x0: i64, y0: i64, x1: i64, y1: i64) -> u64 {
        let x0 = x0.max(0);
        let y0 = y0.max(0);
        let x1 = x1.min(self.width as i64 - 1);
        let y1 = y1.min(self.height as i64 - 1);
        if x1 < x0 || y1 < y0 {
            return 0;
        }
        self.sum_unchecked(x0 as usize, y0 as usize, x1 as usize, y1 as usize)
    }

    #[inline]
    fn sum_unchecked(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
        let d = self.at(x1, y1);
        let b = if x0 > 0 { self.at(x0 - 1, y1) } else { 0 };
        let c = if y0 > 0 { self.at(x1, y0 - 1) } else { 0 };
        let a = if x0 > 0 && y0 > 0 {
            self.at(x0 - 1, y0 - 1)
        } else {
            0
        };
        // a + d >= b + c always holds, so add before subtracting.
        d + a - b - c
    }
}

pub fn integral_image(img: &GrayImage) -> IntegralImage {
    let (w, h) = (img.width, img.height);
    let mut data = vec![0u64; w * h];
    for y in 0..h {
        let mut row = 0u64;
        for x in 0..w {
            row += u64::from(img.get(x, y));
            let above = if y > 0 { data[(y - 1) * w + x] } else { 0 };
            data[y * w + x] = row + above;
        }
    }
    IntegralImage {
        width: w,
        height: h,
        data,
    }
}
