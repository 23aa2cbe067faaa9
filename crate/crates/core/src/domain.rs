//! Domain types shared by the dynamics, metrics and I/O layers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radius coefficients tried per dataset.
pub const LAMBDA_CANDIDATES: [f64; 2] = [0.3, 0.6];

/// Grid for the elasticity coefficient when it is tuned.
pub const K_GRID: [f64; 6] = [0.6, 0.8, 1.0, 1.2, 1.5, 2.0];

/// Standard deviations below this are treated as degenerate and replaced by 1.
pub const STD_FLOOR: f64 = 1e-12;

/// Dense row-major matrix of encoded samples, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::BufferSize {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "row length",
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Builds a matrix without the finiteness scan. Callers guarantee the
    /// invariants hold (used for matrices derived from validated ones).
    pub(crate) fn from_parts_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    /// New matrix whose row `i` is row `order[i]` of `self`.
    pub fn select_rows(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(order.len() * self.cols);
        for &i in order {
            data.extend_from_slice(self.row(i));
        }
        Self::from_parts_unchecked(order.len(), self.cols, data)
    }
}

/// Class index per sample, contiguous over `0..num_classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
        if num_classes < 2 {
            return Err(Error::TooFewClasses(num_classes));
        }
        let mut seen = vec![false; num_classes];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::NonContiguousLabels {
                classes: num_classes,
                missing,
            });
        }
        Ok(Self {
            labels,
            num_classes,
        })
    }

    /// Maps arbitrary raw label values onto `0..C` by sorted order of the
    /// distinct values. Returns the labels and the raw value of each class.
    pub fn from_raw(raw: &[u32]) -> Result<(Self, Vec<u32>)> {
        let mut distinct = raw.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let labels = raw
            .iter()
            .map(|r| distinct.binary_search(r).expect("value is present"))
            .collect();
        Ok((Self::new(labels)?, distinct))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn select(&self, order: &[usize]) -> Self {
        Self {
            labels: order.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// Per-class sample counts.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Splits the sample rows by class. Entry `c` holds the rows labelled `c`,
/// in ascending row order.
pub fn partition_by_class(z: &FeatureMatrix, y: &LabelVector) -> Result<Vec<Vec<usize>>> {
    if z.rows() != y.len() {
        return Err(Error::LengthMismatch {
            what: "labels vs feature rows",
            expected: z.rows(),
            got: y.len(),
        });
    }
    let mut sets = vec![Vec::new(); y.num_classes()];
    for (row, &class) in y.as_slice().iter().enumerate() {
        sets[class].push(row);
    }
    if let Some(class) = sets.iter().position(|s| s.len() < 2) {
        return Err(Error::ClassTooSmall { class });
    }
    Ok(sets)
}

/// A class cluster reduced to a ball: centroid, spread and mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterBall {
    pub center: Vec<f64>,
    /// Per-dimension population standard deviation.
    pub sigma: Vec<f64>,
    pub radius: f64,
    pub mass: f64,
    pub count: usize,
}

impl ClusterBall {
    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// Where the normalization statistics for the dynamics come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormSource {
    /// Statistics supplied by the caller, e.g. computed on a reference corpus.
    ExternalStats,
    /// Per-dimension mean and standard deviation of the input itself.
    #[default]
    SelfStats,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedConfig {
    /// Radius coefficient: ball radius is `lambda * ||sigma||`.
    pub lambda: f64,
    /// Elasticity coefficient of the repulsive force.
    pub k: f64,
    /// Length of one motion interval.
    pub dt: f64,
    pub max_steps: usize,
    /// Early exit once the step displacement falls to this fraction of the first.
    pub epsilon: f64,
    pub norm_source: NormSource,
}

impl Default for PedConfig {
    fn default() -> Self {
        Self {
            lambda: 0.3,
            k: 1.0,
            dt: 0.1,
            max_steps: 5,
            epsilon: 0.5,
            norm_source: NormSource::SelfStats,
        }
    }
}

impl PedConfig {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        // lambda = 0 is allowed: it collapses every ball to a point.
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        positive("k", self.k)?;
        positive("dt", self.dt)?;
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Per-dimension normalization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Builds stats and sanitizes `std`. Returns the stats and how many
    /// entries were replaced.
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<(Self, usize)> {
        if mean.len() != std.len() {
            return Err(Error::DimensionMismatch {
                what: "norm stats std vs mean",
                expected: mean.len(),
                got: std.len(),
            });
        }
        let mut stats = Self { mean, std };
        let replaced = stats.sanitize();
        Ok((stats, replaced))
    }

    /// Replaces std entries below [`STD_FLOOR`] (or non-finite) with 1.
    pub fn sanitize(&mut self) -> usize {
        let mut replaced = 0;
        for s in &mut self.std {
            if !(s.is_finite() && *s >= STD_FLOOR) {
                *s = 1.0;
                replaced += 1;
            }
        }
        replaced
    }

    /// Population mean and standard deviation of each column.
    pub fn from_features(z: &FeatureMatrix) -> Self {
        let n = z.rows() as f64;
        let mut mean = vec![0.0; z.cols()];
        for row in z.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; z.cols()];
        for row in z.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        let mut stats = Self { mean, std };
        stats.sanitize();
        stats
    }

    /// Identity transform of dimension `d`.
    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: usize) -> FeatureMatrix {
        FeatureMatrix::new(rows, 1, (0..rows).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn partition_groups_rows_by_class() {
        let y = LabelVector::new(vec![0, 1, 0, 1]).unwrap();
        let sets = partition_by_class(&matrix(4), &y).unwrap();
        assert_eq!(sets, vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn single_class_is_rejected() {
        let err = LabelVector::new(vec![0, 0, 0]).unwrap_err();
        assert!(err.to_string().contains("need ≥ 2 classes"), "{err}");
    }

    #[test]
    fn singleton_class_is_rejected() {
        let y = LabelVector::new(vec![0, 1, 1]).unwrap();
        let err = partition_by_class(&matrix(3), &y).unwrap_err();
        assert_eq!(err.to_string(), "class 0 has fewer than 2 samples");
    }

    #[test]
    fn partition_rejects_length_mismatch() {
        let y = LabelVector::new(vec![0, 1, 0, 1]).unwrap();
        assert!(matches!(
            partition_by_class(&matrix(5), &y),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn gaps_in_class_ids_are_rejected() {
        assert!(matches!(
            LabelVector::new(vec![0, 2, 2, 0]),
            Err(Error::NonContiguousLabels { missing: 1, .. })
        ));
    }

    #[test]
    fn raw_labels_remap_in_sorted_order() {
        let (y, map) = LabelVector::from_raw(&[7, 3, 7, 11, 3]).unwrap();
        assert_eq!(y.as_slice(), &[1, 0, 1, 2, 0]);
        assert_eq!(map, vec![3, 7, 11]);
    }

    #[test]
    fn matrix_rejects_nan() {
        let err = FeatureMatrix::new(2, 2, vec![0.0, 1.0, f64::NAN, 2.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
    }

    #[test]
    fn std_sanitization() {
        let (stats, replaced) = NormStats::new(vec![0.0; 3], vec![2.0, 0.0, 1e-13]).unwrap();
        assert_eq!(replaced, 2);
        assert_eq!(stats.std, vec![2.0, 1.0, 1.0]);
    }

    #[test]
    fn default_config_is_valid() {
        let c = PedConfig::default();
        c.validate().unwrap();
        assert_eq!((c.lambda, c.k, c.dt, c.max_steps, c.epsilon), (0.3, 1.0, 0.1, 5, 0.5));
        assert!(PedConfig { epsilon: 0.0, ..c.clone() }.validate().is_err());
        assert!(PedConfig { epsilon: 1.0, ..c.clone() }.validate().is_ok());
        assert!(PedConfig { dt: -1.0, ..c }.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn partition_is_a_bijection(labels in proptest::collection::vec(0usize..4, 8..40)) {
                let mut labels = labels;
                // make every class appear at least twice
                labels.extend([0, 0, 1, 1, 2, 2, 3, 3]);
                let y = LabelVector::new(labels.clone()).unwrap();
                let z = matrix(labels.len());
                let sets = partition_by_class(&z, &y).unwrap();
                let mut all: Vec<usize> = sets.iter().flatten().copied().collect();
                prop_assert_eq!(all.len(), labels.len());
                all.sort_unstable();
                all.dedup();
                prop_assert_eq!(all.len(), labels.len());
                for (c, set) in sets.iter().enumerate() {
                    prop_assert!(set.iter().all(|&r| labels[r] == c));
                }
            }

            #[test]
            fn partition_membership_survives_row_permutation(
                labels in proptest::collection::vec(0usize..3, 6..30),
                seed in any::<u64>(),
            ) {
                let mut labels = labels;
                labels.extend([0, 0, 1, 1, 2, 2]);
                let n = labels.len();
                let mut order: Vec<usize> = (0..n).collect();
                // cheap deterministic shuffle
                let mut s = seed | 1;
                for i in (1..n).rev() {
                    s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                    order.swap(i, (s % (i as u64 + 1)) as usize);
                }
                let y = LabelVector::new(labels).unwrap();
                let yp = y.select(&order);
                let a = partition_by_class(&matrix(n), &y).unwrap();
                let b = partition_by_class(&matrix(n), &yp).unwrap();
                for (sa, sb) in a.iter().zip(&b) {
                    let mut mapped: Vec<usize> = sb.iter().map(|&r| order[r]).collect();
                    mapped.sort_unstable();
                    prop_assert_eq!(sa, &mapped);
                }
            }
        }
    }
}
