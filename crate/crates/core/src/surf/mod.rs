//! SURF interest points: box-filter Hessian detection over an integral image,
//! Haar-wavelet orientation and the 64-value descriptor.
//!
//! The usual entry point is [`extract`], which runs detection, orientation
//! and description on one image and reports how many points were dropped.
//! [`strongest_n`] then picks the points that feed the fused feature vector.

mod describe;
mod detect;
mod hessian;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc::IntegralImage;

pub use describe::{assign_orientation, compute_descriptor};
pub use hessian::{hessian_response_map, ResponseMap};

pub const DESCRIPTOR_LEN: usize = 64;

/// Threshold used when no calibrated value is available.
pub const DEFAULT_HESSIAN_THRESHOLD: f64 = 600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterestPoint {
    pub x: f64,
    pub y: f64,
    /// Gaussian-equivalent scale in pixels (1.2 for the 9x9 filter).
    pub scale: f64,
    /// Interpolated Hessian determinant.
    pub response: f64,
    pub laplacian_sign: i8,
    /// Radians in `[0, 2pi)`; zero for upright points.
    pub orientation: f64,
    /// Empty until described, then [`DESCRIPTOR_LEN`] values of unit norm.
    pub descriptor: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfParams {
    pub hessian_threshold: f64,
    pub octaves: usize,
    pub upright: bool,
}

impl Default for SurfParams {
    fn default() -> Self {
        Self {
            hessian_threshold: DEFAULT_HESSIAN_THRESHOLD,
            octaves: 4,
            upright: false,
        }
    }
}

impl SurfParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.octaves) {
            return Err(Error::Argument(format!(
                "octaves must be in 1..=4, got {}",
                self.octaves
            )));
        }
        if !(self.hessian_threshold >= 0.0) {
            return Err(Error::Argument(format!(
                "hessian threshold must be non-negative, got {}",
                self.hessian_threshold
            )));
        }
        Ok(())
    }
}

/// Why a detected point was not described.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    /// The sampling window leaves the image.
    OutOfBounds,
    /// All wavelet responses vanished, so the descriptor cannot be normalized.
    Degenerate,
}

/// Result of running the full SURF pipeline on one image.
#[derive(Debug, Clone, Default)]
pub struct Extraction {
    /// Described points in [`strongest_n`] order.
    pub points: Vec<InterestPoint>,
    pub dropped_out_of_bounds: usize,
    pub dropped_degenerate: usize,
}

/// Detects interest points (position, scale, response, laplacian sign).
/// Orientation and descriptor are left unfilled.
pub fn detect_interest_points(ii: &IntegralImage, params: &SurfParams) -> Result<Vec<InterestPoint>> {
    params.validate()?;
    let mut points: Vec<_> = detect::detect_candidates(ii, params, params.hessian_threshold)?
        .into_iter()
        .map(|c| c.point)
        .collect();
    sort_by_strength(&mut points);
    Ok(points)
}

/// Detects, orients and describes every interest point of an image.
pub fn extract(ii: &IntegralImage, params: &SurfParams) -> Result<Extraction> {
    let detected = detect_interest_points(ii, params)?;
    Ok(describe_all(ii, detected, params.upright))
}

fn describe_all(ii: &IntegralImage, detected: Vec<InterestPoint>, upright: bool) -> Extraction {
    let mut out = Extraction::default();
    for mut p in detected {
        let described = if upright {
            Ok(0.0)
        } else {
            assign_orientation(ii, &p)
        }
        .and_then(|o| {
            p.orientation = o;
            compute_descriptor(ii, &p, upright)
        });
        match described {
            Ok(d) => {
                p.descriptor = d;
                out.points.push(p);
            }
            Err(Rejection::OutOfBounds) => out.dropped_out_of_bounds += 1,
            Err(Rejection::Degenerate) => out.dropped_degenerate += 1,
        }
    }
    out
}

fn strength_order(a: &InterestPoint, b: &InterestPoint) -> Ordering {
    b.response
        .total_cmp(&a.response)
        .then_with(|| b.scale.total_cmp(&a.scale))
        .then_with(|| a.y.total_cmp(&b.y))
        .then_with(|| a.x.total_cmp(&b.x))
}

fn sort_by_strength(points: &mut [InterestPoint]) {
    points.sort_by(strength_order);
}

/// The `n` strongest points: response descending, ties broken by scale
/// descending, then `y` and `x` ascending.
pub fn strongest_n(points: &[InterestPoint], n: usize) -> Vec<InterestPoint> {
    let mut sorted = points.to_vec();
    sort_by_strength(&mut sorted);
    sorted.truncate(n);
    sorted
}

/// Largest Hessian threshold at which the median image still yields at least
/// `target` described points.
///
/// Runs the detector once per image with a zero threshold and reads the
/// answer off the per-image response distributions.
pub fn calibrate_threshold(images: &[IntegralImage], params: &SurfParams, target: usize) -> Result<f64> {
    if images.is_empty() {
        return Err(Error::Argument("calibration needs at least one image".into()));
    }
    if target == 0 {
        return Err(Error::Argument("calibration target must be positive".into()));
    }
    params.validate()?;
    let mut kth = Vec::with_capacity(images.len());
    for ii in images {
        let candidates = detect::detect_candidates(ii, params, 0.0)?;
        let mut keyed: Vec<(f64, InterestPoint)> = candidates.into_iter().map(|c| (c.key, c.point)).collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0));
        // keep only points that would survive description
        let mut survivors = Vec::new();
        for (key, p) in keyed {
            let ex = describe_all(ii, vec![p], params.upright);
            if !ex.points.is_empty() {
                survivors.push(key);
                if survivors.len() == target {
                    break;
                }
            }
        }
        kth.push(if survivors.len() == target {
            survivors[target - 1]
        } else {
            0.0
        });
    }
    kth.sort_by(|a, b| b.total_cmp(a));
    let idx = images.len().div_ceil(2) - 1;
    Ok(kth[idx])
}
