use std::f64::consts::{FRAC_PI_3, PI};

use super::hessian::rect;
use super::{InterestPoint, Rejection, DESCRIPTOR_LEN};
use crate::imgproc::IntegralImage;

const TWO_PI: f64 = 2.0 * PI;

/// Right half minus left half of a `size` x `size` window.
#[inline]
fn haar_x(ii: &IntegralImage, row: i64, col: i64, size: i64) -> f64 {
    let h = size / 2;
    rect(ii, row - h, col, size, h) - rect(ii, row - h, col - h, size, h)
}

/// Bottom half minus top half.
#[inline]
fn haar_y(ii: &IntegralImage, row: i64, col: i64, size: i64) -> f64 {
    let h = size / 2;
    rect(ii, row, col - h, h, size) - rect(ii, row - h, col - h, h, size)
}

#[inline]
fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TWO_PI);
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

fn fits(ii: &IntegralImage, x: f64, y: f64, extent: f64) -> bool {
    x - extent >= 0.0
        && y - extent >= 0.0
        && x + extent <= (ii.width() - 1) as f64
        && y + extent <= (ii.height() - 1) as f64
}

/// Dominant gradient direction around `p`, in radians within `[0, 2pi)`.
///
/// Haar responses of side `4s` are sampled at step `s` inside a disc of
/// radius `6s` and Gaussian weighted (sigma `2.5s`). A sector of angle
/// pi/3 slides around the response plane; the orientation is the angle of
/// the largest summed response vector.
pub fn assign_orientation(ii: &IntegralImage, p: &InterestPoint) -> Result<f64, Rejection> {
    let s = p.scale.round().max(1.0);
    if !fits(ii, p.x, p.y, 6.0 * s) {
        return Err(Rejection::OutOfBounds);
    }
    let si = s as i64;
    let row = p.y.round() as i64;
    let col = p.x.round() as i64;

    let mut samples: Vec<(f64, f64, f64)> = Vec::with_capacity(113);
    for i in -6i64..=6 {
        for j in -6i64..=6 {
            let d2 = (i * i + j * j) as f64;
            if d2 >= 36.0 {
                continue;
            }
            let w = (-d2 / (2.0 * 2.5 * 2.5)).exp();
            let rx = w * haar_x(ii, row + j * si, col + i * si, 4 * si);
            let ry = w * haar_y(ii, row + j * si, col + i * si, 4 * si);
            if rx != 0.0 || ry != 0.0 {
                samples.push((rx, ry, wrap_angle(ry.atan2(rx))));
            }
        }
    }

    let mut best = 0.0;
    let mut orientation = 0.0;
    for &(_, _, start) in &samples {
        let (mut sx, mut sy) = (0.0, 0.0);
        for &(rx, ry, a) in &samples {
            let rel = (a - start).rem_euclid(TWO_PI);
            if rel < FRAC_PI_3 {
                sx += rx;
                sy += ry;
            }
        }
        let mag = sx * sx + sy * sy;
        if mag > best {
            best = mag;
            orientation = wrap_angle(sy.atan2(sx));
        }
    }
    Ok(orientation)
}

/// Distance from the keypoint to the farthest pixel touched by the descriptor.
fn descriptor_extent(scale: f64, orientation: f64, upright: bool) -> f64 {
    let s = scale.round().max(1.0);
    let reach = if upright {
        9.5
    } else {
        9.5 * (orientation.cos().abs() + orientation.sin().abs())
    };
    reach * scale + s
}

/// 64-value SURF descriptor: a `20s` window (rotated to `p.orientation`
/// unless `upright`) split into 4x4 subregions of 5x5 samples; each
/// subregion stores (sum dx, sum dy, sum |dx|, sum |dy|) of Gaussian-weighted
/// Haar responses (side `2s`, sigma `3.3s`) expressed in the window frame.
/// The result has unit L2 norm.
pub fn compute_descriptor(
    ii: &IntegralImage,
    p: &InterestPoint,
    upright: bool,
) -> Result<Vec<f64>, Rejection> {
    let theta = if upright { 0.0 } else { p.orientation };
    if !fits(ii, p.x, p.y, descriptor_extent(p.scale, theta, upright)) {
        return Err(Rejection::OutOfBounds);
    }
    let (sin, cos) = theta.sin_cos();
    let scale = p.scale;
    let wavelet = 2 * (scale.round().max(1.0) as i64);

    let mut desc = vec![0.0; DESCRIPTOR_LEN];
    for j in 0..4 {
        for i in 0..4 {
            let (mut sdx, mut sdy, mut adx, mut ady) = (0.0, 0.0, 0.0, 0.0);
            for l in 0..5 {
                for k in 0..5 {
                    let u = -10.0 + (5 * i + k) as f64 + 0.5;
                    let v = -10.0 + (5 * j + l) as f64 + 0.5;
                    let sx = p.x + scale * (u * cos - v * sin);
                    let sy = p.y + scale * (u * sin + v * cos);
                    let row = sy.round() as i64;
                    let col = sx.round() as i64;
                    let w = (-(u * u + v * v) / (2.0 * 3.3 * 3.3)).exp();
                    let rx = haar_x(ii, row, col, wavelet);
                    let ry = haar_y(ii, row, col, wavelet);
                    let dx = w * (rx * cos + ry * sin);
                    let dy = w * (-rx * sin + ry * cos);
                    sdx += dx;
                    sdy += dy;
                    adx += dx.abs();
                    ady += dy.abs();
                }
            }
            let base = (j * 4 + i) * 4;
            desc[base] = sdx;
            desc[base + 1] = sdy;
            desc[base + 2] = adx;
            desc[base + 3] = ady;
        }
    }

    let norm = desc.iter().map(|d| d * d).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Rejection::Degenerate);
    }
    desc.iter_mut().for_each(|d| *d /= norm);
    Ok(desc)
}
