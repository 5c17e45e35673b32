use crate::error::{Error, Result};
use crate::imgproc::IntegralImage;

/// Filter sizes per octave. Sizes shared between octaves are computed once,
/// at the finest sampling step in which they appear.
pub(crate) const OCTAVE_FILTERS: [[usize; 4]; 4] = [
    [9, 15, 21, 27],
    [15, 27, 39, 51],
    [27, 51, 75, 99],
    [51, 99, 147, 195],
];

/// Weight that balances the box-filter Dxy against Dxx and Dyy.
const DXY_WEIGHT: f64 = 0.9;

/// Determinant-of-Hessian responses of one box-filter size on a sampling grid.
#[derive(Debug, Clone)]
pub struct ResponseMap {
    pub width: usize,
    pub height: usize,
    pub filter_size: usize,
    pub sampling_step: usize,
    values: Vec<f64>,
    laplacian: Vec<i8>,
    empty: bool,
}

impl ResponseMap {
    #[inline]
    pub fn response(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn laplacian_sign(&self, row: usize, col: usize) -> i8 {
        self.laplacian[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when the filter does not fit anywhere in the image.
    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// Reads this map at a grid position of a coarser map `src`.
    #[inline]
    pub(crate) fn response_at(&self, row: usize, col: usize, src: &ResponseMap) -> f64 {
        let k = src.sampling_step / self.sampling_step;
        self.response(row * k, col * k)
    }

    #[inline]
    pub(crate) fn laplacian_at(&self, row: usize, col: usize, src: &ResponseMap) -> i8 {
        let k = src.sampling_step / self.sampling_step;
        self.laplacian_sign(row * k, col * k)
    }
}

/// Sum over `rows x cols` pixels starting at (`row`, `col`), clipped at the border.
#[inline]
pub(crate) fn rect(ii: &IntegralImage, row: i64, col: i64, rows: i64, cols: i64) -> f64 {
    ii.box_sum_clipped(col, row, col + cols - 1, row + rows - 1) as f64
}

/// Box-filter Dxx, Dyy, Dxy at pixel (`row`, `col`), normalized by filter area.
#[inline]
fn second_derivatives(ii: &IntegralImage, row: i64, col: i64, filter: i64) -> (f64, f64, f64) {
    let lobe = filter / 3;
    let half = (filter - 1) / 2;
    let inv_area = 1.0 / (filter * filter) as f64;

    let dxx = rect(ii, row - lobe + 1, col - half, 2 * lobe - 1, filter)
        - 3.0 * rect(ii, row - lobe + 1, col - lobe / 2, 2 * lobe - 1, lobe);
    let dyy = rect(ii, row - half, col - lobe + 1, filter, 2 * lobe - 1)
        - 3.0 * rect(ii, row - lobe / 2, col - lobe + 1, lobe, 2 * lobe - 1);
    let dxy = rect(ii, row - lobe, col + 1, lobe, lobe) + rect(ii, row + 1, col - lobe, lobe, lobe)
        - rect(ii, row - lobe, col - lobe, lobe, lobe)
        - rect(ii, row + 1, col + 1, lobe, lobe);

    (dxx * inv_area, dyy * inv_area, dxy * inv_area)
}

/// Computes the Hessian response map for one filter size.
///
/// Samples sit at pixel `(col * step, row * step)`. Samples where the filter
/// would cross the border stay zero. When the filter fits nowhere the map is
/// returned all-zero and flagged via [`ResponseMap::is_empty`].
pub fn hessian_response_map(
    ii: &IntegralImage,
    filter_size: usize,
    sampling_step: usize,
) -> Result<ResponseMap> {
    if filter_size < 9 || filter_size.is_multiple_of(2) {
        return Err(Error::Argument(format!(
            "filter size must be odd and at least 9, got {filter_size}"
        )));
    }
    if sampling_step == 0 {
        return Err(Error::Argument("sampling step must be positive".into()));
    }
    let width = ii.width() / sampling_step;
    let height = ii.height() / sampling_step;
    let mut values = vec![0.0; width * height];
    let mut laplacian = vec![1i8; width * height];
    let half = (filter_size - 1) / 2;
    let mut any = false;

    for ar in 0..height {
        let r = ar * sampling_step;
        if r < half || r + half >= ii.height() {
            continue;
        }
        for ac in 0..width {
            let c = ac * sampling_step;
            if c < half || c + half >= ii.width() {
                continue;
            }
            any = true;
            let (dxx, dyy, dxy) =
                second_derivatives(ii, r as i64, c as i64, filter_size as i64);
            let idx = ar * width + ac;
            values[idx] = dxx * dyy - (DXY_WEIGHT * dxy) * (DXY_WEIGHT * dxy);
            laplacian[idx] = if dxx + dyy >= 0.0 { 1 } else { -1 };
        }
    }

    Ok(ResponseMap {
        width,
        height,
        filter_size,
        sampling_step,
        values,
        laplacian,
        empty: !any,
    })
}

/// All response maps needed for `octaves` octaves, keyed by filter size.
pub(crate) fn build_pyramid(ii: &IntegralImage, octaves: usize) -> Result<Vec<ResponseMap>> {
    let mut maps: Vec<ResponseMap> = Vec::new();
    for (o, filters) in OCTAVE_FILTERS.iter().take(octaves).enumerate() {
        let step = 1usize << o;
        for &f in filters {
            if maps.iter().all(|m| m.filter_size != f) {
                maps.push(hessian_response_map(ii, f, step)?);
            }
        }
    }
    Ok(maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::{integral_image, GrayImage};

    #[test]
    fn rejects_bad_filter_sizes() {
        let ii = integral_image(&GrayImage::filled(40, 40, 9).unwrap());
        assert!(hessian_response_map(&ii, 8, 1).is_err());
        assert!(hessian_response_map(&ii, 10, 1).is_err());
        assert!(hessian_response_map(&ii, 9, 0).is_err());
    }

    #[test]
    fn filter_larger_than_image_is_flagged_empty() {
        let ii = integral_image(&GrayImage::filled(20, 20, 50).unwrap());
        let map = hessian_response_map(&ii, 27, 1).unwrap();
        assert!(map.is_empty());
        assert!(map.values().iter().all(|&v| v == 0.0));
        assert!(!hessian_response_map(&ii, 9, 1).unwrap().is_empty());
    }

    #[test]
    fn pyramid_shares_filter_sizes() {
        let ii = integral_image(&GrayImage::filled(64, 64, 0).unwrap());
        let maps = build_pyramid(&ii, 4).unwrap();
        let sizes: Vec<_> = maps.iter().map(|m| (m.filter_size, m.sampling_step)).collect();
        assert_eq!(
            sizes,
            vec![
                (9, 1),
                (15, 1),
                (21, 1),
                (27, 1),
                (39, 2),
                (51, 2),
                (75, 4),
                (99, 4),
                (147, 8),
                (195, 8)
            ]
        );
    }

    #[test]
    fn blob_center_gives_positive_response_and_laplacian() {
        // dark square on white: a blob, so det > 0 and trace > 0 at its center
        let img = GrayImage::from_fn(41, 41, |x, y| {
            if (17..=23).contains(&x) && (17..=23).contains(&y) {
                0
            } else {
                255
            }
        })
        .unwrap();
        let ii = integral_image(&img);
        let map = hessian_response_map(&ii, 15, 1).unwrap();
        assert!(map.response(20, 20) > 0.0);
        assert_eq!(map.laplacian_sign(20, 20), 1);
    }
}
