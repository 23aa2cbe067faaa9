//! Regularized Fisher discriminant with a Bayes decision rule.
//!
//! The projection solves `S_B u = ρ ((1-λ) S_W + λ I) u` and keeps the
//! leading `min(D, C-1)` directions, each scaled to unit Euclidean norm.
//! Samples are then scored with the linear discriminant
//! `δ_c(x) = xᵀ U Uᵀ μ_c - ½ μ_cᵀ U Uᵀ μ_c + ln q_c`, and the score is the
//! mean softmax probability of the true class.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::domain::{partition_by_class, FeatureMatrix, LabelVector};
use crate::error::{Error, Result};

pub const DEFAULT_SHRINKAGE: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct FdaModel {
    /// `D x K` projection, columns in order of decreasing eigenvalue.
    #[serde(skip)]
    pub transform: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// `Uᵀ μ_c` per class.
    pub class_means_projected: Vec<Vec<f64>>,
    pub class_priors: Vec<f64>,
    pub shrinkage: f64,
}

/// Between-class and within-class scatter, both as unnormalized sums.
pub fn scatter_matrices(z: &FeatureMatrix, y: &LabelVector) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let parts = partition_by_class(z, y)?;
    let d = z.cols();
    let n = z.rows() as f64;
    let mut global = DVector::<f64>::zeros(d);
    for row in z.iter_rows() {
        global += DVector::from_column_slice(row);
    }
    global /= n;

    let mut between = DMatrix::<f64>::zeros(d, d);
    let mut within = DMatrix::<f64>::zeros(d, d);
    for rows in &parts {
        let mut mean = DVector::<f64>::zeros(d);
        for &r in rows {
            mean += DVector::from_column_slice(z.row(r));
        }
        mean /= rows.len() as f64;
        let shift = &mean - &global;
        between.ger(rows.len() as f64, &shift, &shift, 1.0);
        for &r in rows {
            let dev = DVector::from_column_slice(z.row(r)) - &mean;
            within.ger(1.0, &dev, &dev, 1.0);
        }
    }
    Ok((between, within))
}

/// `(1 - λ) S_W + λ I`.
pub fn regularized_within(within: &DMatrix<f64>, shrinkage: f64) -> DMatrix<f64> {
    let d = within.nrows();
    within * (1.0 - shrinkage) + DMatrix::<f64>::identity(d, d) * shrinkage
}

pub fn sfda_fit(z: &FeatureMatrix, y: &LabelVector, shrinkage: f64) -> Result<FdaModel> {
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::InvalidConfig(format!(
            "shrinkage must lie in [0, 1], got {shrinkage}"
        )));
    }
    let (between, within) = scatter_matrices(z, y)?;
    let denom = regularized_within(&within, shrinkage);

    // Reduce to a standard symmetric problem through the Cholesky factor
    // of the denominator: M = L⁻¹ S_B L⁻ᵀ, U = L⁻ᵀ W.
    let chol = denom.cholesky().ok_or_else(|| {
        Error::Numerical(
            "regularized within-class scatter is not positive definite; increase shrinkage".into(),
        )
    })?;
    let l = chol.l();
    let l_inv_sb = l
        .solve_lower_triangular(&between)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let reduced = l
        .solve_lower_triangular(&l_inv_sb.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(reduced, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("generalized eigenproblem did not converge".into()))?;

    let d = z.cols();
    let k = d.min(y.num_classes() - 1);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(k);

    let lt = l.transpose();
    let mut transform = DMatrix::<f64>::zeros(d, k);
    let mut eigenvalues = Vec::with_capacity(k);
    for (col, &idx) in order.iter().enumerate() {
        let w = eig.eigenvectors.column(idx).into_owned();
        let mut u = lt
            .solve_upper_triangular(&w)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        let norm = u.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numerical(format!("eigenvector {col} has norm {norm}")));
        }
        u /= norm;
        transform.set_column(col, &u);
        eigenvalues.push(eig.eigenvalues[idx]);
    }

    let parts = partition_by_class(z, y)?;
    let n = z.rows() as f64;
    let mut class_means_projected = Vec::with_capacity(parts.len());
    let mut class_priors = Vec::with_capacity(parts.len());
    for rows in &parts {
        let mut mean = DVector::<f64>::zeros(d);
        for &r in rows {
            mean += DVector::from_column_slice(z.row(r));
        }
        mean /= rows.len() as f64;
        class_means_projected.push(transform.tr_mul(&mean).iter().copied().collect());
        class_priors.push(rows.len() as f64 / n);
    }

    Ok(FdaModel {
        transform,
        eigenvalues,
        class_means_projected,
        class_priors,
        shrinkage,
    })
}

/// Discriminant values `δ_c(x)` for every sample, one row per sample.
pub fn discriminants(model: &FdaModel, z: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
    if z.cols() != model.transform.nrows() {
        return Err(Error::DimensionMismatch {
            what: "features vs fitted projection",
            expected: model.transform.nrows(),
            got: z.cols(),
        });
    }
    let offsets: Vec<f64> = model
        .class_means_projected
        .iter()
        .zip(&model.class_priors)
        .map(|(p, q)| -0.5 * p.iter().map(|v| v * v).sum::<f64>() + q.ln())
        .collect();
    Ok(z
        .iter_rows()
        .map(|row| {
            let x = model.transform.tr_mul(&DVector::from_column_slice(row));
            model
                .class_means_projected
                .iter()
                .zip(&offsets)
                .map(|(p, off)| x.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + off)
                .collect()
        })
        .collect())
}

/// Mean softmax probability assigned to each sample's true class.
pub fn sfda_score(model: &FdaModel, z: &FeatureMatrix, y: &LabelVector) -> Result<f64> {
    if z.rows() != y.len() {
        return Err(Error::LengthMismatch {
            what: "labels vs feature rows",
            expected: z.rows(),
            got: y.len(),
        });
    }
    if y.num_classes() != model.class_priors.len() {
        return Err(Error::DimensionMismatch {
            what: "class count vs fitted model",
            expected: model.class_priors.len(),
            got: y.num_classes(),
        });
    }
    let deltas = discriminants(model, z)?;
    let mut total = 0.0;
    for (delta, &label) in deltas.iter().zip(y.as_slice()) {
        let max = delta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let norm: f64 = delta.iter().map(|v| (v - max).exp()).sum();
        total += (delta[label] - max).exp() / norm;
    }
    Ok(total / z.rows() as f64)
}

/// Fits and scores in one go.
pub fn sfda(z: &FeatureMatrix, y: &LabelVector, shrinkage: f64) -> Result<f64> {
    let model = sfda_fit(z, y, shrinkage)?;
    sfda_score(&model, z, y)
}
