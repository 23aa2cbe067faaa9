//! Log marginal evidence of a Bayesian linear head on frozen features.
//!
//! Each one-hot class column `y_c` is modelled as `y_c = F w + e` with prior
//! `w ~ N(0, α⁻¹ I)` and noise `e ~ N(0, β⁻¹ I)`. The evidence `p(y_c | F)` is
//! maximized over `(α, β)` with the usual fixed-point updates
//!
//! ```text
//! γ = Σ β s_i / (α + β s_i)
//! α ← γ / mᵀm
//! β ← (n − γ) / ||F m − y_c||²
//! ```
//!
//! where `s_i` are the eigenvalues of `FᵀF` and `m` the posterior mean. The
//! Gram matrix is diagonalized once, on whichever side is smaller, so every
//! iteration is `O(min(n, d))`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::domain::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};

pub const TOLERANCE: f64 = 1e-5;
pub const MAX_ITERATIONS: usize = 100;
pub const FLOOR: f64 = 1e-12;

/// Evidence maximization result for one class column.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceFit {
    pub alpha: f64,
    pub beta: f64,
    /// Maximized log evidence (not divided by n).
    pub log_evidence: f64,
    /// Log evidence at the start and after every update.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogmeFit {
    pub classes: Vec<EvidenceFit>,
    /// Mean over classes of `log_evidence / n`.
    pub score: f64,
}

/// Eigen-decomposition of the smaller Gram matrix.
struct Spectrum {
    n: usize,
    d: usize,
    eigenvalues: Vec<f64>,
    /// `d x d` eigenvectors of `FᵀF` (primal) or `n x n` of `FFᵀ` (dual).
    basis: DMatrix<f64>,
    primal: bool,
    features: DMatrix<f64>,
}

/// Statistics of the posterior mean at a given `(α, β)`.
struct Posterior {
    mtm: f64,
    residual: f64,
    gamma: f64,
}

impl Spectrum {
    fn new(z: &FeatureMatrix) -> Result<Self> {
        let (n, d) = (z.rows(), z.cols());
        let features = DMatrix::from_row_slice(n, d, z.as_slice());
        let primal = d <= n;
        let gram = if primal {
            features.tr_mul(&features)
        } else {
            &features * features.transpose()
        };
        let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numerical("eigen-decomposition of the Gram matrix did not converge".into()))?;
        let eigenvalues = eig
            .eigenvalues
            .iter()
            .map(|&s| if s < FLOOR { 0.0 } else { s })
            .collect();
        Ok(Self {
            n,
            d,
            eigenvalues,
            basis: eig.eigenvectors,
            primal,
            features,
        })
    }

    /// Projection of a target column onto the eigenbasis: `Vᵀ Fᵀ y` (primal)
    /// or `Uᵀ y` (dual).
    fn project(&self, y: &DVector<f64>) -> Vec<f64> {
        let p = if self.primal {
            self.basis.tr_mul(&self.features.tr_mul(y))
        } else {
            self.basis.tr_mul(y)
        };
        p.iter().copied().collect()
    }

    fn posterior(&self, proj: &[f64], y_sq: f64, alpha: f64, beta: f64) -> Posterior {
        let mut mtm = 0.0;
        let mut gamma = 0.0;
        let mut residual;
        if self.primal {
            // m = V w, w_i = β z_i / (α + β s_i)
            let mut cross = 0.0;
            let mut fit = 0.0;
            for (&s, &zi) in self.eigenvalues.iter().zip(proj) {
                let w = beta * zi / (alpha + beta * s);
                mtm += w * w;
                cross += zi * w;
                fit += s * w * w;
                gamma += beta * s / (alpha + beta * s);
            }
            residual = y_sq - 2.0 * cross + fit;
        } else {
            // m = Fᵀ U q, q_i = β p_i / (α + β s_i); F m = U S q
            residual = 0.0;
            for (&s, &pi) in self.eigenvalues.iter().zip(proj) {
                let q = beta * pi / (alpha + beta * s);
                mtm += s * q * q;
                let r = s * q - pi;
                residual += r * r;
                gamma += beta * s / (alpha + beta * s);
            }
        }
        residual = residual.max(FLOOR);
        Posterior {
            mtm: mtm.max(FLOOR),
            residual,
            gamma,
        }
    }

    fn log_evidence(&self, post: &Posterior, alpha: f64, beta: f64) -> f64 {
        let (n, d) = (self.n as f64, self.d as f64);
        let mut log_det: f64 = self.eigenvalues.iter().map(|s| (alpha + beta * s).ln()).sum();
        // eigenvalues of FᵀF beyond the rank of the dual Gram are zero
        log_det += (self.d.saturating_sub(self.eigenvalues.len())) as f64 * alpha.ln();
        0.5 * n * beta.ln() + 0.5 * d * alpha.ln()
            - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
            - 0.5 * beta * post.residual
            - 0.5 * alpha * post.mtm
            - 0.5 * log_det
    }

    fn maximize(&self, y: &DVector<f64>) -> Result<EvidenceFit> {
        let proj = self.project(y);
        let y_sq = y.norm_squared();
        let (mut alpha, mut beta) = (1.0, 1.0);
        let mut post = self.posterior(&proj, y_sq, alpha, beta);
        let mut current = self.log_evidence(&post, alpha, beta);
        let mut trace = vec![current];
        for _ in 0..MAX_ITERATIONS {
            alpha = (post.gamma / post.mtm).max(FLOOR);
            beta = ((self.n as f64 - post.gamma) / post.residual).max(FLOOR);
            post = self.posterior(&proj, y_sq, alpha, beta);
            let next = self.log_evidence(&post, alpha, beta);
            if !next.is_finite() {
                return Err(Error::Numerical(format!(
                    "log evidence diverged (alpha={alpha}, beta={beta})"
                )));
            }
            trace.push(next);
            let done = (next - current).abs() < TOLERANCE;
            current = next;
            if done {
                break;
            }
        }
        Ok(EvidenceFit {
            alpha,
            beta,
            log_evidence: current,
            trace,
        })
    }
}

pub fn logme_fit(z: &FeatureMatrix, y: &LabelVector) -> Result<LogmeFit> {
    if z.rows() != y.len() {
        return Err(Error::LengthMismatch {
            what: "labels vs feature rows",
            expected: z.rows(),
            got: y.len(),
        });
    }
    if z.rows() < 2 {
        return Err(Error::TooFewEntries {
            needed: 2,
            got: z.rows(),
        });
    }
    let first = z.row(0);
    if z.iter_rows().all(|r| r == first) {
        return Err(Error::DegenerateInput("all feature rows are identical".into()));
    }

    let spectrum = Spectrum::new(z)?;
    let mut classes = Vec::with_capacity(y.num_classes());
    for c in 0..y.num_classes() {
        let target = DVector::from_iterator(
            y.len(),
            y.as_slice().iter().map(|&l| if l == c { 1.0 } else { 0.0 }),
        );
        classes.push(spectrum.maximize(&target)?);
    }
    let n = z.rows() as f64;
    let score = classes.iter().map(|f| f.log_evidence / n).sum::<f64>() / classes.len() as f64;
    Ok(LogmeFit { classes, score })
}

/// LogME transferability score.
pub fn logme(z: &FeatureMatrix, y: &LabelVector) -> Result<f64> {
    Ok(logme_fit(z, y)?.score)
}
