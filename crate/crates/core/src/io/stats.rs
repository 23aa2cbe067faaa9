//! Normalization statistics as JSON: `{"mean": [..], "std": [..]}`.

use std::fs;
use std::path::Path;

use crate::domain::NormStats;
use crate::error::{Error, Result};

pub fn write_norm_stats(path: &Path, stats: &NormStats) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(stats).expect("stats serialize");
    json.push(b'\n');
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Reads stats and replaces degenerate std entries with 1.
pub fn read_norm_stats(path: &Path) -> Result<NormStats> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let raw: NormStats = serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let (stats, replaced) = NormStats::new(raw.mean, raw.std)?;
    if replaced > 0 {
        log::warn!(
            "{}: {replaced} std entries below the floor were replaced by 1",
            path.display()
        );
    }
    Ok(stats)
}
