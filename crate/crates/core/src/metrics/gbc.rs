//! Gaussian Bhattacharyya coefficient: class separability from the pairwise
//! overlap of diagonal Gaussian fits.

use crate::domain::{partition_by_class, FeatureMatrix, LabelVector};
use crate::error::Result;

pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Diagonal Gaussian fit of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGaussian {
    pub mean: Vec<f64>,
    /// Population variance per dimension, floored at [`VARIANCE_FLOOR`].
    pub var: Vec<f64>,
}

impl DiagGaussian {
    pub fn fit(z: &FeatureMatrix, rows: &[usize]) -> Self {
        let n = rows.len() as f64;
        let d = z.cols();
        let mut mean = vec![0.0; d];
        for &r in rows {
            for (m, v) in mean.iter_mut().zip(z.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &r in rows {
            for ((s, v), m) in var.iter_mut().zip(z.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s = (*s / n).max(VARIANCE_FLOOR));
        Self { mean, var }
    }
}

/// Bhattacharyya distance between two diagonal Gaussians, using the averaged
/// covariance for the Mahalanobis term.
pub fn bhattacharyya(a: &DiagGaussian, b: &DiagGaussian) -> f64 {
    let mut mahalanobis = 0.0;
    let mut log_det_avg = 0.0;
    let mut log_det_a = 0.0;
    let mut log_det_b = 0.0;
    for d in 0..a.mean.len() {
        let avg = 0.5 * (a.var[d] + b.var[d]);
        let diff = a.mean[d] - b.mean[d];
        mahalanobis += diff * diff / avg;
        log_det_avg += avg.ln();
        log_det_a += a.var[d].ln();
        log_det_b += b.var[d].ln();
    }
    0.125 * mahalanobis + 0.5 * (log_det_avg - 0.5 * (log_det_a + log_det_b))
}

/// `-Σ_{i≠j} exp(-BC(i, j))` over ordered class pairs.
pub fn gbc(z: &FeatureMatrix, y: &LabelVector) -> Result<f64> {
    let parts = partition_by_class(z, y)?;
    let fits: Vec<DiagGaussian> = parts.iter().map(|rows| DiagGaussian::fit(z, rows)).collect();
    let mut total = 0.0;
    for (i, a) in fits.iter().enumerate() {
        for (j, b) in fits.iter().enumerate() {
            if i != j {
                total += (-bhattacharyya(a, b)).exp();
            }
        }
    }
    Ok(-total)
}
