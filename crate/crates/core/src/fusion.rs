//! Per-house feature assembly and min-max normalization.
//!
//! Layout of a fused vector for `n` visual features per image:
//!
//! ```text
//! [bedrooms, bathrooms, area, zipcode,
//!  frontal  d_1 .. d_n,   (64 values each, strongest first)
//!  bedroom  d_1 .. d_n,
//!  kitchen  d_1 .. d_n,
//!  bathroom d_1 .. d_n]
//! ```
//!
//! Images with fewer than `n` descriptors are zero padded.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{HouseRecord, ImageRole};
use crate::error::{Error, Result};
use crate::surf::DESCRIPTOR_LEN;

/// Largest number of visual features per image the sweep uses.
pub const MAX_FEATURES: usize = 15;
pub const TEXTUAL_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub features_per_image: usize,
}

impl Layout {
    pub fn len(&self) -> usize {
        TEXTUAL_LEN + ImageRole::ALL.len() * self.features_per_image * DESCRIPTOR_LEN
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Offset of the first value contributed by `role`.
    pub fn image_offset(&self, role: ImageRole) -> usize {
        let slot = ImageRole::ALL.iter().position(|r| *r == role).unwrap();
        TEXTUAL_LEN + slot * self.features_per_image * DESCRIPTOR_LEN
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFeatureVector {
    pub house_id: u32,
    pub values: Vec<f64>,
    pub layout: Layout,
}

/// Descriptors per image role, strongest first.
pub type RoleDescriptors = BTreeMap<ImageRole, Vec<Vec<f64>>>;

/// Builds the fused vector of one house with `n` descriptors per image.
pub fn assemble(house: &HouseRecord, descriptors: &RoleDescriptors, n: usize) -> Result<RawFeatureVector> {
    if n > MAX_FEATURES {
        return Err(Error::Argument(format!(
            "at most {MAX_FEATURES} features per image, got {n}"
        )));
    }
    let layout = Layout {
        features_per_image: n,
    };
    let mut values = Vec::with_capacity(layout.len());
    values.extend_from_slice(&house.textual());
    for role in ImageRole::ALL {
        if !house.image_paths.contains_key(&role) {
            return Err(Error::MissingImage {
                id: house.id,
                role: role.to_string(),
            });
        }
        let Some(descs) = descriptors.get(&role) else {
            return Err(Error::MissingImage {
                id: house.id,
                role: role.to_string(),
            });
        };
        for d in descs.iter().take(n) {
            if d.len() != DESCRIPTOR_LEN {
                return Err(Error::Dimension(format!(
                    "house {} {role}: descriptor of length {}",
                    house.id,
                    d.len()
                )));
            }
            values.extend_from_slice(d);
        }
        let missing = n.saturating_sub(descs.len());
        values.extend(std::iter::repeat_n(0.0, missing * DESCRIPTOR_LEN));
    }
    debug_assert_eq!(values.len(), layout.len());
    Ok(RawFeatureVector {
        house_id: house.id,
        values,
        layout,
    })
}

const NORMALIZER_VERSION: u32 = 1;

/// Per-dimension min-max scaler fitted on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub version: u32,
    pub dims: usize,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Dimensions where `min == max`; these always normalize to 0.
    pub constant: Vec<bool>,
}

impl Normalizer {
    pub fn fit<R: AsRef<[f64]>>(training: &[R]) -> Result<Self> {
        let Some(first) = training.first() else {
            return Err(Error::Data("cannot fit a normalizer on no data".into()));
        };
        let dims = first.as_ref().len();
        let mut min = vec![f64::INFINITY; dims];
        let mut max = vec![f64::NEG_INFINITY; dims];
        for (i, row) in training.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dims {
                return Err(Error::Dimension(format!(
                    "training row {i} has {} values, expected {dims}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Data(format!("non-finite value in row {i}, column {j}")));
                }
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        let constant = min.iter().zip(&max).map(|(a, b)| a == b).collect();
        Ok(Self {
            version: NORMALIZER_VERSION,
            dims,
            min,
            max,
            constant,
        })
    }

    /// Scaler for a single column of values (e.g. the prices).
    pub fn fit_column(values: &[f64]) -> Result<Self> {
        let rows: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
        Self::fit(&rows)
    }

    /// `(x - min) / (max - min)`, clamped to `[0, 1]`.
    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dims {
            return Err(Error::Dimension(format!(
                "vector of length {} for a {}-dimensional normalizer",
                v.len(),
                self.dims
            )));
        }
        Ok(v.iter()
            .enumerate()
            .map(|(j, &x)| self.scale_one(j, x))
            .collect())
    }

    pub fn transform_all<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform(r.as_ref())).collect()
    }

    #[inline]
    fn scale_one(&self, j: usize, x: f64) -> f64 {
        if self.constant[j] {
            0.0
        } else {
            ((x - self.min[j]) / (self.max[j] - self.min[j])).clamp(0.0, 1.0)
        }
    }

    /// Normalizes one value of dimension `dim`.
    pub fn transform_value(&self, dim: usize, x: f64) -> Result<f64> {
        if dim >= self.dims {
            return Err(Error::Dimension(format!("dimension {dim} out of {}", self.dims)));
        }
        Ok(self.scale_one(dim, x))
    }

    /// Maps a normalized value of dimension 0 back to the original units.
    pub fn denormalize_target(&self, z: f64) -> Result<f64> {
        if self.dims == 0 {
            return Err(Error::Dimension("empty normalizer".into()));
        }
        if self.constant[0] {
            return Err(Error::Domain(
                "cannot invert a normalizer fitted on a constant target".into(),
            ));
        }
        Ok(z * (self.max[0] - self.min[0]) + self.min[0])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let n: Normalizer = serde_json::from_str(&text)?;
        if n.version != NORMALIZER_VERSION {
            return Err(Error::Data(format!("unsupported normalizer version {}", n.version)));
        }
        if n.min.len() != n.dims || n.max.len() != n.dims || n.constant.len() != n.dims {
            return Err(Error::Data("normalizer arrays disagree with dims".into()));
        }
        Ok(n)
    }
}
