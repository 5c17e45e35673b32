//! Per-image descriptor cache.
//!
//! Records live in `<cache>/surf-<params hash>/<id>_<role>.json`, so a
//! parameter change starts a fresh namespace. A record is reused only when
//! the SHA-256 of the image bytes still matches.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::sha256_hex;
use crate::data::{HouseRecord, ImageRole};
use crate::error::{Error, Result};
use crate::fusion::{RoleDescriptors, MAX_FEATURES};
use crate::imgproc::{equalize_histogram, integral_image, GrayImage};
use crate::surf::{extract, strongest_n, InterestPoint, SurfParams};

const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRecord {
    pub version: u32,
    pub house_id: u32,
    pub role: ImageRole,
    pub image_sha256: String,
    pub params: SurfParams,
    /// Up to [`MAX_FEATURES`] described points, strongest first.
    pub points: Vec<InterestPoint>,
    pub detected: usize,
    pub dropped_out_of_bounds: usize,
    pub dropped_degenerate: usize,
}

/// Cache directory name for one parameter set.
pub fn namespace(params: &SurfParams) -> String {
    let h = sha256_hex(serde_json::to_string(params).expect("params serialize").as_bytes());
    format!("surf-{}", &h[..16])
}

/// Full per-image pipeline: grayscale, equalize, integrate, detect, describe,
/// keep the strongest [`MAX_FEATURES`].
pub fn describe_image(img: &GrayImage, params: &SurfParams) -> Result<(Vec<InterestPoint>, crate::surf::Extraction)> {
    let ii = integral_image(&equalize_histogram(img));
    let ex = extract(&ii, params)?;
    Ok((strongest_n(&ex.points, MAX_FEATURES), ex))
}

fn decode(path: &Path, bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    crate::imgproc::to_grayscale(rgb.width() as usize, rgb.height() as usize, rgb.as_raw())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub namespace: String,
    pub records: usize,
    pub computed: usize,
    pub reused: usize,
    /// Images that yielded fewer than the maximum number of features.
    pub short_images: usize,
    pub dropped_out_of_bounds: usize,
    pub dropped_degenerate: usize,
}

/// Descriptors of every house plus a fingerprint of the image content.
#[derive(Debug, Clone)]
pub struct HouseFeatures {
    pub houses: Vec<HouseRecord>,
    pub descriptors: BTreeMap<u32, RoleDescriptors>,
    pub image_hashes: BTreeMap<(u32, ImageRole), String>,
    pub report: ExtractReport,
}

fn record_path(dir: &Path, id: u32, role: ImageRole) -> PathBuf {
    dir.join(format!("{id}_{role}.json"))
}

fn load_record(path: &Path, hash: &str) -> Option<DescriptorRecord> {
    let text = std::fs::read_to_string(path).ok()?;
    let rec: DescriptorRecord = serde_json::from_str(&text).ok()?;
    (rec.version == RECORD_VERSION && rec.image_sha256 == hash).then_some(rec)
}

fn store_record(path: &Path, rec: &DescriptorRecord) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_string(rec)?).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Runs extraction for every (house, role), reading and writing `cache`
/// when given. Images are processed in parallel.
pub fn extract_houses(houses: Vec<HouseRecord>, params: &SurfParams, cache: Option<&Path>) -> Result<HouseFeatures> {
    params.validate()?;
    let ns = namespace(params);
    let dir = cache.map(|c| c.join(&ns));
    if let Some(d) = &dir {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let jobs: Vec<(u32, ImageRole, PathBuf)> = houses
        .iter()
        .flat_map(|h| h.image_paths.iter().map(move |(r, p)| (h.id, *r, p.clone())))
        .collect();

    let results: Vec<Result<(DescriptorRecord, bool)>> = jobs
        .par_iter()
        .map(|(id, role, path)| {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            let hash = sha256_hex(&bytes);
            if let Some(d) = &dir {
                if let Some(rec) = load_record(&record_path(d, *id, *role), &hash) {
                    return Ok((rec, false));
                }
            }
            let (points, ex) = describe_image(&decode(path, &bytes)?, params)?;
            let rec = DescriptorRecord {
                version: RECORD_VERSION,
                house_id: *id,
                role: *role,
                image_sha256: hash,
                params: *params,
                points,
                detected: ex.points.len() + ex.dropped_out_of_bounds + ex.dropped_degenerate,
                dropped_out_of_bounds: ex.dropped_out_of_bounds,
                dropped_degenerate: ex.dropped_degenerate,
            };
            if let Some(d) = &dir {
                store_record(&record_path(d, *id, *role), &rec)?;
            }
            Ok((rec, true))
        })
        .collect();

    let mut report = ExtractReport {
        namespace: ns,
        ..Default::default()
    };
    let mut descriptors: BTreeMap<u32, RoleDescriptors> = BTreeMap::new();
    let mut image_hashes = BTreeMap::new();
    for r in results {
        let (rec, computed) = r?;
        report.records += 1;
        if computed {
            report.computed += 1;
        } else {
            report.reused += 1;
        }
        if rec.points.len() < MAX_FEATURES {
            report.short_images += 1;
        }
        report.dropped_out_of_bounds += rec.dropped_out_of_bounds;
        report.dropped_degenerate += rec.dropped_degenerate;
        image_hashes.insert((rec.house_id, rec.role), rec.image_sha256);
        descriptors
            .entry(rec.house_id)
            .or_default()
            .insert(rec.role, rec.points.into_iter().map(|p| p.descriptor).collect());
    }
    Ok(HouseFeatures {
        houses,
        descriptors,
        image_hashes,
        report,
    })
}

impl HouseFeatures {
    /// SHA-256 over the attribute values and all image hashes.
    pub fn fingerprint(&self) -> String {
        let mut text = String::new();
        for h in &self.houses {
            text.push_str(&format!(
                "{} {} {} {} {} {}\n",
                h.id, h.bedrooms, h.bathrooms, h.area, h.zipcode, h.price
            ));
        }
        for ((id, role), hash) in &self.image_hashes {
            text.push_str(&format!("{id}_{role} {hash}\n"));
        }
        sha256_hex(text.as_bytes())
    }
}

/// Hessian threshold at which the median of up to `max_images` evenly
/// spaced dataset images yields at least `target` described points.
pub fn calibrate_houses(houses: &[HouseRecord], params: &SurfParams, target: usize, max_images: usize) -> Result<f64> {
    let paths: Vec<&PathBuf> = houses.iter().flat_map(|h| h.image_paths.values()).collect();
    if paths.is_empty() || max_images == 0 {
        return Err(Error::Argument("calibration needs at least one image".into()));
    }
    let stride = paths.len().div_ceil(max_images).max(1);
    let images: Vec<_> = paths
        .iter()
        .step_by(stride)
        .map(|p| {
            let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
            Ok(integral_image(&equalize_histogram(&decode(p, &bytes)?)))
        })
        .collect::<Result<_>>()?;
    crate::surf::calibrate_threshold(&images, params, target)
}
