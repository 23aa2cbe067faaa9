//! Feature pack: a directory holding `manifest.json`, `features.bin`
//! (little-endian `f32`, row-major `n x d`) and `labels.bin` (little-endian
//! `u32`, one per row).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FEATURES_FILE: &str = "features.bin";
pub const LABELS_FILE: &str = "labels.bin";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturePackManifest {
    pub format_version: u32,
    pub model_name: String,
    pub dataset_name: String,
    pub n: usize,
    pub d: usize,
    pub dtype: String,
    pub byte_order: String,
    pub layout: String,
    pub features_file: String,
    pub labels_file: String,
}

impl FeaturePackManifest {
    pub fn new(model_name: impl Into<String>, dataset_name: impl Into<String>, n: usize, d: usize) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            model_name: model_name.into(),
            dataset_name: dataset_name.into(),
            n,
            d,
            dtype: "f32".into(),
            byte_order: "little".into(),
            layout: "row-major".into(),
            features_file: FEATURES_FILE.into(),
            labels_file: LABELS_FILE.into(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Manifest(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        for (field, value, expected) in [
            ("dtype", &self.dtype, "f32"),
            ("byte_order", &self.byte_order, "little"),
            ("layout", &self.layout, "row-major"),
        ] {
            if value != expected {
                return Err(Error::Manifest(format!("{field} must be \"{expected}\", got \"{value}\"")));
            }
        }
        if self.n == 0 || self.d == 0 {
            return Err(Error::Manifest(format!("empty pack (n={}, d={})", self.n, self.d)));
        }
        Ok(())
    }
}

/// A pack loaded into memory.
#[derive(Debug, Clone)]
pub struct FeaturePack {
    pub features: FeatureMatrix,
    pub labels: LabelVector,
    pub manifest: FeaturePackManifest,
    /// Raw stored label of each class index, when the stored labels were not
    /// already `0..C`.
    pub label_map: Option<Vec<u32>>,
}

pub fn write_feature_pack(
    dir: &Path,
    z: &FeatureMatrix,
    y: &LabelVector,
    model_name: &str,
    dataset_name: &str,
) -> Result<FeaturePackManifest> {
    let labels: Vec<u32> = y
        .as_slice()
        .iter()
        .map(|&l| u32::try_from(l).expect("class index fits in u32"))
        .collect();
    write_raw_pack(dir, z, &labels, model_name, dataset_name)
}

/// Writes already encoded labels verbatim (no contiguity requirement).
pub fn write_raw_pack(
    dir: &Path,
    z: &FeatureMatrix,
    labels: &[u32],
    model_name: &str,
    dataset_name: &str,
) -> Result<FeaturePackManifest> {
    if labels.len() != z.rows() {
        return Err(Error::LengthMismatch {
            what: "labels vs feature rows",
            expected: z.rows(),
            got: labels.len(),
        });
    }
    let mut features = Vec::with_capacity(z.rows() * z.cols() * 4);
    for (i, &v) in z.as_slice().iter().enumerate() {
        let narrowed = v as f32;
        if !narrowed.is_finite() {
            return Err(Error::NonFinite {
                row: i / z.cols(),
                col: i % z.cols(),
            });
        }
        features.extend_from_slice(&narrowed.to_le_bytes());
    }
    let label_bytes: Vec<u8> = labels.iter().flat_map(|l| l.to_le_bytes()).collect();

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = FeaturePackManifest::new(model_name, dataset_name, z.rows(), z.cols());
    write_file(&dir.join(FEATURES_FILE), &features)?;
    write_file(&dir.join(LABELS_FILE), &label_bytes)?;
    let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    json.push(b'\n');
    write_file(&dir.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(dir: &Path) -> Result<FeaturePackManifest> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = read_file(&path)?;
    let manifest: FeaturePackManifest =
        serde_json::from_slice(&bytes).map_err(|source| Error::Json { path, source })?;
    manifest.validate()?;
    Ok(manifest)
}

fn resolve(dir: &Path, rel: &str) -> PathBuf {
    dir.join(rel)
}

pub fn read_feature_pack(dir: &Path) -> Result<FeaturePack> {
    let manifest = read_manifest(dir)?;
    let (n, d) = (manifest.n, manifest.d);

    let features = read_file(&resolve(dir, &manifest.features_file))?;
    if features.len() != n * d * 4 {
        return Err(Error::Manifest(format!(
            "length mismatch: {} is {} bytes, expected n*d*4 = {}",
            manifest.features_file,
            features.len(),
            n * d * 4
        )));
    }
    let labels = read_file(&resolve(dir, &manifest.labels_file))?;
    if labels.len() != n * 4 {
        return Err(Error::Manifest(format!(
            "length mismatch: {} is {} bytes, expected n*4 = {}",
            manifest.labels_file,
            labels.len(),
            n * 4
        )));
    }

    let values: Vec<f64> = features
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    let features = FeatureMatrix::new(n, d, values)?;
    let raw: Vec<u32> = labels
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();

    let (labels, distinct) = LabelVector::from_raw(&raw)?;
    let contiguous = distinct.iter().enumerate().all(|(i, &v)| v as usize == i);
    Ok(FeaturePack {
        features,
        labels,
        manifest,
        label_map: (!contiguous).then_some(distinct),
    })
}
