//! Independent reference implementations used by the integration suites.
#![allow(dead_code)]

use houseprice::imgproc::{integral_image, GrayImage};
use houseprice::surf::{extract, InterestPoint, SurfParams};
use houseprice::mlp::{sigmoid, MlpModel, OutputActivation};
use houseprice::svr::Gram;
use nalgebra::{DMatrix, DVector};

/// `(x, y, sigma, amplitude)` of one isotropic Gaussian blob.
pub type Blob = (f64, f64, f64, f64);

pub fn blob_image(w: usize, h: usize, background: f64, blobs: &[Blob]) -> GrayImage {
    GrayImage::from_fn(w, h, |x, y| {
        let mut v = background;
        for &(bx, by, s, a) in blobs {
            let d2 = (x as f64 - bx).powi(2) + (y as f64 - by).powi(2);
            v += a * (-d2 / (2.0 * s * s)).exp();
        }
        v.round().clamp(0.0, 255.0) as u8
    })
    .unwrap()
}

/// Rotates by 90 degrees: pixel `(x, y)` moves to `(h - 1 - y, x)`.
pub fn rotate90(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let (nx, ny) = (h - 1 - y, x);
            out[ny * h + nx] = img.get(x, y);
        }
    }
    GrayImage::new(h, w, out).unwrap()
}

/// Strongest point of the rotated image against its counterpart in the
/// original; returns the descriptor L2 distance and orientation change.
pub fn rotation_match(img: &GrayImage) -> (f64, f64) {
    let p = SurfParams {
        hessian_threshold: 5.0,
        octaves: 4,
        upright: false,
    };
    let a = extract(&integral_image(img), &p).unwrap().points;
    let b = extract(&integral_image(&rotate90(img)), &p).unwrap().points;
    let q = &b[0];
    let n = img.height() as f64;
    let mapped = |p: &InterestPoint| (n - 1.0 - p.y, p.x);
    let orig = a
        .iter()
        .min_by(|u, v| {
            let du = (mapped(u).0 - q.x).hypot(mapped(u).1 - q.y);
            let dv = (mapped(v).0 - q.x).hypot(mapped(v).1 - q.y);
            du.total_cmp(&dv)
        })
        .unwrap();
    let dist = orig
        .descriptor
        .iter()
        .zip(&q.descriptor)
        .map(|(u, v)| (u - v).powi(2))
        .sum::<f64>()
        .sqrt();
    let turn = (q.orientation - orig.orientation).rem_euclid(std::f64::consts::TAU);
    (dist, turn)
}

pub fn shift(img: &GrayImage, dx: usize, dy: usize, fill: u8) -> GrayImage {
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        if x >= dx && y >= dy {
            img.get(x - dx, y - dy)
        } else {
            fill
        }
    })
    .unwrap()
}

pub fn brute_box_sum(img: &GrayImage, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
    let mut s = 0u64;
    for y in y0..=y1 {
        for x in x0..=x1 {
            s += img.get(x, y) as u64;
        }
    }
    s
}

/// Two nested loops over the stored weights, no shared code with the crate.
pub fn naive_forward(m: &MlpModel, x: &[f64]) -> f64 {
    let mut z_out = m.output_bias;
    for j in 0..m.hidden_weights.len() {
        let mut z = m.hidden_bias[j];
        for i in 0..x.len() {
            z += m.hidden_weights[j][i] * x[i];
        }
        z_out += m.output_weights[j] * (1.0 / (1.0 + (-z).exp()));
    }
    match m.output {
        OutputActivation::Sigmoid => sigmoid(z_out),
        OutputActivation::Linear => z_out,
    }
}

/// Central finite-difference Jacobian of the residuals (step `h`).
pub fn fd_jacobian(m: &MlpModel, x: &[Vec<f64>], y: &[f64], h: f64) -> DMatrix<f64> {
    let p0 = m.params();
    let mut j = DMatrix::zeros(x.len(), p0.len());
    let mut probe = m.clone();
    for p in 0..p0.len() {
        let mut plus = p0.clone();
        plus[p] += h;
        probe.set_params(&plus).unwrap();
        let fp: Vec<f64> = x.iter().zip(y).map(|(r, t)| naive_forward(&probe, r) - t).collect();
        let mut minus = p0.clone();
        minus[p] -= h;
        probe.set_params(&minus).unwrap();
        let fm: Vec<f64> = x.iter().zip(y).map(|(r, t)| naive_forward(&probe, r) - t).collect();
        for k in 0..x.len() {
            j[(k, p)] = (fp[k] - fm[k]) / (2.0 * h);
        }
    }
    j
}

/// Max relative error with an absolute floor so near-zero entries compare
/// on absolute terms.
pub fn max_rel_error(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(u, v)| (u - v).abs() / u.abs().max(v.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Exhaustive active-set solution of the epsilon-SVR dual on a tiny problem.
pub struct QpSolution {
    pub objective: f64,
    pub beta: Vec<f64>,
    pub bias: f64,
}

/// Maximizes `-1/2 b'Kb - eps sum|b| + y'b` s.t. `sum b = 0`, `|b_i| <= C`
/// by enumerating every assignment of each `b_i` to one of
/// `{-C, free<0, 0, free>0, C}` and solving the stationarity system on the
/// free set.
pub fn qp_oracle(gram: &Gram, y: &[f64], c: f64, eps: f64) -> QpSolution {
    let n = y.len();
    let k = DMatrix::from_fn(n, n, |i, j| gram.get(i, j));
    let objective = |b: &[f64]| {
        let bv = DVector::from_column_slice(b);
        -0.5 * (bv.transpose() * &k * &bv)[(0, 0)] - eps * b.iter().map(|v| v.abs()).sum::<f64>()
            + b.iter().zip(y).map(|(b, y)| b * y).sum::<f64>()
    };
    let mut best: Option<QpSolution> = None;
    let states = 5usize.pow(n as u32);
    for code in 0..states {
        let mut state = vec![0usize; n];
        let mut c2 = code;
        for s in state.iter_mut() {
            *s = c2 % 5;
            c2 /= 5;
        }
        let mut beta = vec![0.0; n];
        let mut free = Vec::new();
        let mut sign = Vec::new();
        for i in 0..n {
            match state[i] {
                0 => beta[i] = -c,
                1 => {
                    free.push(i);
                    sign.push(-1.0);
                }
                2 => beta[i] = 0.0,
                3 => {
                    free.push(i);
                    sign.push(1.0);
                }
                _ => beta[i] = c,
            }
        }
        let fixed_sum: f64 = beta.iter().sum();
        if free.is_empty() {
            if fixed_sum.abs() > 1e-12 {
                continue;
            }
        } else {
            let f = free.len();
            let mut a = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    a[(r, cc)] = k[(i, j)];
                }
                a[(r, f)] = 1.0;
                a[(f, r)] = 1.0;
                let fixed: f64 = (0..n).filter(|j| !free.contains(j)).map(|j| k[(i, j)] * beta[j]).sum();
                rhs[r] = y[i] - eps * sign[r] - fixed;
            }
            rhs[f] = -fixed_sum;
            let Some(sol) = a.clone().lu().solve(&rhs) else { continue };
            if (&a * &sol - &rhs).amax() > 1e-9 {
                continue;
            }
            let mut ok = true;
            for (r, &i) in free.iter().enumerate() {
                let v = sol[r];
                let inside = if sign[r] < 0.0 { v > -c - 1e-12 && v < 1e-12 } else { v > -1e-12 && v < c + 1e-12 };
                ok &= inside;
                beta[i] = v;
            }
            if !ok {
                continue;
            }
        }
        let obj = objective(&beta);
        if best.as_ref().is_none_or(|b| obj > b.objective) {
            // bias from the first strictly free variable, else midpoint of bounds
            let f_no_b = |i: usize| (0..n).map(|j| k[(i, j)] * beta[j]).sum::<f64>();
            let strictly_free = (0..n).find(|&i| beta[i].abs() > 1e-9 && beta[i].abs() < c - 1e-9);
            let bias = match strictly_free {
                Some(i) => y[i] - f_no_b(i) - eps * beta[i].signum(),
                None => f64::NAN,
            };
            best = Some(QpSolution {
                objective: obj,
                beta: beta.clone(),
                bias,
            });
        }
    }
    best.expect("feasible point beta = 0 always exists")
}

/// Ordinary least squares fit `y ~ a + b x`; returns the fitted values.
pub fn ols_fit(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    x.iter().map(|v| a + b * v).collect()
}

pub fn xor_data() -> (Vec<Vec<f64>>, Vec<f64>) {
    (
        vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
        vec![0.1, 0.9, 0.9, 0.1],
    )
}
