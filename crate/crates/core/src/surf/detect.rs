use nalgebra::{Matrix3, Vector3};

use super::hessian::{build_pyramid, ResponseMap, OCTAVE_FILTERS};
use super::{InterestPoint, SurfParams};
use crate::error::Result;
use crate::imgproc::IntegralImage;

/// Scale (in pixels) represented by a box filter of size 9.
const BASE_SCALE: f64 = 1.2;

pub(crate) struct Candidate {
    pub point: InterestPoint,
    /// Smaller of the grid response and the refined response; the point
    /// survives any threshold not exceeding this value.
    pub key: f64,
}

/// Candidates that pass the scale-space non-maximum suppression and the
/// interpolation step, before thresholding.
pub(crate) fn detect_candidates(
    ii: &IntegralImage,
    params: &SurfParams,
    threshold: f64,
) -> Result<Vec<Candidate>> {
    let maps = build_pyramid(ii, params.octaves)?;
    let find = |f: usize| maps.iter().find(|m| m.filter_size == f).expect("pyramid layer");

    let mut out = Vec::new();
    for filters in OCTAVE_FILTERS.iter().take(params.octaves) {
        for i in 0..2 {
            let b = find(filters[i]);
            let m = find(filters[i + 1]);
            let t = find(filters[i + 2]);
            if t.is_empty() {
                continue;
            }
            scan_triple(b, m, t, threshold, &mut out);
        }
    }
    Ok(out)
}

fn scan_triple(b: &ResponseMap, m: &ResponseMap, t: &ResponseMap, threshold: f64, out: &mut Vec<Candidate>) {
    let border = (t.filter_size + 1) / (2 * t.sampling_step);
    if t.height <= 2 * border + 1 || t.width <= 2 * border + 1 {
        return;
    }
    for r in (border + 1)..(t.height - border) {
        for c in (border + 1)..(t.width - border) {
            if let Some(cand) = local_maximum(r, c, b, m, t, threshold) {
                out.push(cand);
            }
        }
    }
}

fn local_maximum(
    r: usize,
    c: usize,
    b: &ResponseMap,
    m: &ResponseMap,
    t: &ResponseMap,
    threshold: f64,
) -> Option<Candidate> {
    let candidate = m.response_at(r, c, t);
    if candidate < threshold || candidate <= 0.0 {
        return None;
    }
    // Equal responses only block when they come earlier in (layer, row,
    // column) order, so exactly one sample of a tied plateau survives.
    let blocks = |value: f64, earlier: bool| value > candidate || (value == candidate && earlier);
    for rr in [r - 1, r, r + 1] {
        for cc in [c - 1, c, c + 1] {
            if blocks(t.response(rr, cc), false) || blocks(b.response_at(rr, cc, t), true) {
                return None;
            }
            if (rr != r || cc != c) && blocks(m.response_at(rr, cc, t), (rr, cc) < (r, c)) {
                return None;
            }
        }
    }
    refine(r, c, b, m, t, candidate, threshold)
}

/// Fits a 3D quadratic around the grid maximum and moves to its peak.
fn refine(
    r: usize,
    c: usize,
    b: &ResponseMap,
    m: &ResponseMap,
    t: &ResponseMap,
    v: f64,
    threshold: f64,
) -> Option<Candidate> {
    let mid = |rr: usize, cc: usize| m.response_at(rr, cc, t);
    let top = |rr: usize, cc: usize| t.response(rr, cc);
    let bot = |rr: usize, cc: usize| b.response_at(rr, cc, t);

    let grad = Vector3::new(
        (mid(r, c + 1) - mid(r, c - 1)) / 2.0,
        (mid(r + 1, c) - mid(r - 1, c)) / 2.0,
        (top(r, c) - bot(r, c)) / 2.0,
    );
    let dxx = mid(r, c + 1) + mid(r, c - 1) - 2.0 * v;
    let dyy = mid(r + 1, c) + mid(r - 1, c) - 2.0 * v;
    let dss = top(r, c) + bot(r, c) - 2.0 * v;
    let dxy = (mid(r + 1, c + 1) - mid(r + 1, c - 1) - mid(r - 1, c + 1) + mid(r - 1, c - 1)) / 4.0;
    let dxs = (top(r, c + 1) - top(r, c - 1) - bot(r, c + 1) + bot(r, c - 1)) / 4.0;
    let dys = (top(r + 1, c) - top(r - 1, c) - bot(r + 1, c) + bot(r - 1, c)) / 4.0;
    let hessian = Matrix3::new(dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss);

    let offset = -(hessian.try_inverse()? * grad);
    if offset.iter().any(|o| !o.is_finite() || o.abs() > 0.5) {
        return None;
    }
    let refined = v + 0.5 * grad.dot(&offset);
    let key = v.min(refined);
    if key < threshold {
        return None;
    }

    let step = t.sampling_step as f64;
    let filter_gap = (m.filter_size - b.filter_size) as f64;
    let filter = m.filter_size as f64 + offset[2] * filter_gap;
    Some(Candidate {
        point: InterestPoint {
            x: (c as f64 + offset[0]) * step,
            y: (r as f64 + offset[1]) * step,
            scale: BASE_SCALE * filter / 9.0,
            response: refined,
            laplacian_sign: m.laplacian_at(r, c, t),
            orientation: 0.0,
            descriptor: Vec::new(),
        },
        key,
    })
}
