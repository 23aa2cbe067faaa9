//! Frozen fixture suites and independent reference computations shared by
//! the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ped_core::dynamics::build_balls;
use ped_core::io::{synth_clusters, SynthSpec};
use ped_core::{FeatureMatrix, LabelVector, NormStats, PedConfig};

pub struct Instance {
    pub name: String,
    pub features: FeatureMatrix,
    pub labels: LabelVector,
}

fn generate(c: usize, d: usize, per_class: usize, spread: f64, sigma: f64, seed: u64) -> Instance {
    let data = synth_clusters(&SynthSpec {
        c,
        d,
        per_class,
        center_spread: spread,
        sigma,
        seed,
    })
    .expect("valid synth spec");
    Instance {
        name: format!("c{c}-d{d}-seed{seed}"),
        features: data.features,
        labels: data.labels,
    }
}

/// Balls of `inst` in the self-normalized space at `lambda`.
pub fn normalized_balls(inst: &Instance, lambda: f64) -> Vec<ped_core::ClusterBall> {
    let stats = NormStats::from_features(&inst.features);
    let zn = ped_core::dynamics::normalize(&inst.features, &stats).unwrap();
    build_balls(&zn, &inst.labels, lambda).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn min_overlap_margin(inst: &Instance, lambda: f64) -> (f64, f64) {
    // (smallest gap / (r_i + r_j), largest overlap)
    let balls = normalized_balls(inst, lambda);
    let mut ratio = f64::INFINITY;
    let mut overlap: f64 = 0.0;
    for i in 0..balls.len() {
        for j in i + 1..balls.len() {
            let g = dist(&balls[i].center, &balls[j].center);
            let r = balls[i].radius + balls[j].radius;
            ratio = ratio.min(g / r);
            overlap = overlap.max(r - g);
        }
    }
    (ratio, overlap)
}

/// 50 well separated instances: every pairwise center gap exceeds twice
/// the sum of radii under the default radius coefficient. Seeds are taken
/// in increasing order and skipped while the condition fails.
pub fn separated_suite() -> Vec<Instance> {
    let lambda = PedConfig::default().lambda;
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < 50 {
        let c = 2 + (seed % 5) as usize;
        let d = [2, 4, 8, 16][(seed % 4) as usize];
        let inst = generate(c, d, 10, 10.0, 0.05, seed);
        if min_overlap_margin(&inst, lambda).0 > 2.0 {
            out.push(inst);
        }
        seed += 1;
    }
    out
}

/// 20 overlapping two-class instances, five per dimension in {1, 2, 8, 64}.
pub fn two_cluster_suite() -> Vec<Instance> {
    let lambda = PedConfig::default().lambda;
    let mut out = Vec::new();
    for (slot, &d) in [1usize, 2, 8, 64].iter().enumerate() {
        let mut seed = 1000 * (slot as u64 + 1);
        let mut taken = 0;
        while taken < 5 {
            let inst = generate(2, d, 30, 0.2, 1.0, seed);
            if min_overlap_margin(&inst, lambda).1 > 0.0 {
                out.push(inst);
                taken += 1;
            }
            seed += 1;
        }
    }
    out
}

/// 100 overlapping instances with 3 to 10 classes and 2 to 64 dimensions.
pub fn multi_cluster_suite() -> Vec<Instance> {
    let lambda = PedConfig::default().lambda;
    let dims = [2usize, 4, 8, 16, 32, 64];
    let mut out = Vec::new();
    let mut seed = 50_000u64;
    while out.len() < 100 {
        let i = out.len();
        let c = 3 + i % 8;
        let d = dims[(i / 8) % dims.len()];
        let inst = generate(c, d, 12, 0.5, 1.0, seed);
        seed += 1;
        if min_overlap_margin(&inst, lambda).1 > 0.0 {
            out.push(inst);
        }
    }
    out
}

/// 20 overlapping instances with 2 to 4 classes, for before/after scoring.
pub fn separation_suite() -> Vec<Instance> {
    let lambda = PedConfig::default().lambda;
    let dims = [2usize, 4, 8, 16, 32];
    let mut out = Vec::new();
    let mut seed = 90_000u64;
    while out.len() < 20 {
        let i = out.len();
        let c = 2 + i % 3;
        let d = dims[i % dims.len()];
        let inst = generate(c, d, 25, 0.4, 1.0, seed);
        seed += 1;
        if min_overlap_margin(&inst, lambda).1 > 0.0 {
            out.push(inst);
        }
    }
    out
}

/// Population covariance of each class, row-major `d x d`.
pub fn class_covariances(z: &FeatureMatrix, y: &LabelVector) -> Vec<Vec<f64>> {
    let d = z.cols();
    (0..y.num_classes())
        .map(|c| {
            let rows: Vec<&[f64]> = (0..z.rows()).filter(|&r| y.as_slice()[r] == c).map(|r| z.row(r)).collect();
            let n = rows.len() as f64;
            let mut mean = vec![0.0; d];
            for r in &rows {
                for (m, v) in mean.iter_mut().zip(*r) {
                    *m += v / n;
                }
            }
            let mut cov = vec![0.0; d * d];
            for r in &rows {
                for a in 0..d {
                    for b in 0..d {
                        cov[a * d + b] += (r[a] - mean[a]) * (r[b] - mean[b]) / n;
                    }
                }
            }
            cov
        })
        .collect()
}

/// Brute-force rank correlation: mean of `sign(g_i - g_j) * sign(p_i - p_j)`
/// over ordered pairs `i != j`.
pub fn tau_oracle(g: &[f64], p: &[f64]) -> f64 {
    let n = g.len();
    let sign = |v: f64| {
        if v > 0.0 {
            1i64
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    let mut total = 0i64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += sign(g[i] - g[j]) * sign(p[i] - p[j]);
            }
        }
    }
    total as f64 / (n * (n - 1)) as f64
}

/// Log evidence of `y = F w + e` evaluated directly with a Cholesky
/// factor of `A = αI + βFᵀF`.
pub fn log_evidence_direct(f: &DMatrix<f64>, y: &DVector<f64>, alpha: f64, beta: f64) -> f64 {
    let (n, d) = (f.nrows() as f64, f.ncols());
    let a = DMatrix::<f64>::identity(d, d) * alpha + f.tr_mul(f) * beta;
    let chol = a.clone().cholesky().expect("A is positive definite");
    let m = chol.solve(&(f.tr_mul(y) * beta));
    let resid = (f * &m - y).norm_squared();
    let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    0.5 * n * beta.ln() + 0.5 * d as f64 * alpha.ln()
        - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * beta * resid
        - 0.5 * alpha * m.norm_squared()
        - 0.5 * log_det
}

/// Maximum of the direct log evidence over a log-spaced `(α, β)` grid,
/// refined around the best cell until the cell width is negligible.
pub fn grid_max_log_evidence(f: &DMatrix<f64>, y: &DVector<f64>) -> (f64, f64, f64) {
    let (mut lo_a, mut hi_a) = (-6.0f64, 6.0f64);
    let (mut lo_b, mut hi_b) = (-6.0f64, 6.0f64);
    let steps = 60;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for _ in 0..12 {
        let (wa, wb) = ((hi_a - lo_a) / steps as f64, (hi_b - lo_b) / steps as f64);
        for i in 0..=steps {
            for j in 0..=steps {
                let la = lo_a + wa * i as f64;
                let lb = lo_b + wb * j as f64;
                let (a, b) = (10f64.powf(la), 10f64.powf(lb));
                let v = log_evidence_direct(f, y, a, b);
                if v > best.0 {
                    best = (v, la, lb);
                }
            }
        }
        lo_a = best.1 - 2.0 * wa;
        hi_a = best.1 + 2.0 * wa;
        lo_b = best.2 - 2.0 * wb;
        hi_b = best.2 + 2.0 * wb;
    }
    (best.0, 10f64.powf(best.1), 10f64.powf(best.2))
}

/// Mean over classes of the grid-maximized evidence per sample.
pub fn logme_oracle(z: &FeatureMatrix, y: &LabelVector) -> f64 {
    let f = DMatrix::from_row_slice(z.rows(), z.cols(), z.as_slice());
    let c = y.num_classes();
    let mut total = 0.0;
    for class in 0..c {
        let target = DVector::from_iterator(z.rows(), y.as_slice().iter().map(|&l| if l == class { 1.0 } else { 0.0 }));
        total += grid_max_log_evidence(&f, &target).0 / z.rows() as f64;
    }
    total / c as f64
}

/// Small committed fixtures for the evidence oracle.
pub fn logme_fixtures() -> Vec<(&'static str, FeatureMatrix, LabelVector)> {
    let m = |rows: &[&[f64]]| FeatureMatrix::from_rows(rows).unwrap();
    let l = |v: &[usize]| LabelVector::new(v.to_vec()).unwrap();
    vec![
        (
            "line-two-classes",
            m(&[&[-1.2], &[-0.7], &[-0.9], &[0.2], &[0.8], &[1.1], &[0.5], &[-0.1]]),
            l(&[0, 0, 0, 0, 1, 1, 1, 1]),
        ),
        (
            "plane-two-classes",
            m(&[
                &[0.1, 1.0],
                &[0.4, 0.7],
                &[-0.3, 1.2],
                &[0.9, -0.2],
                &[1.3, 0.1],
                &[0.8, 0.4],
                &[0.2, 0.3],
                &[1.0, 0.9],
            ]),
            l(&[0, 0, 0, 1, 1, 1, 0, 1]),
        ),
        (
            "plane-three-classes",
            m(&[
                &[0.0, 0.0],
                &[0.3, -0.2],
                &[-0.1, 0.4],
                &[2.0, 0.1],
                &[1.7, -0.3],
                &[2.2, 0.5],
                &[0.9, 2.1],
                &[1.2, 1.8],
                &[0.8, 2.4],
                &[1.1, 0.9],
            ]),
            l(&[0, 0, 0, 1, 1, 1, 2, 2, 2, 1]),
        ),
        (
            "space-two-classes",
            m(&[
                &[0.5, -1.0, 0.3],
                &[0.2, -0.8, 0.9],
                &[0.7, -1.3, -0.2],
                &[0.1, -0.4, 0.4],
                &[-0.6, 0.9, 0.1],
                &[-0.2, 1.1, -0.5],
                &[-0.9, 0.6, 0.8],
                &[0.3, 0.2, -0.4],
                &[-0.4, 0.5, 0.0],
                &[0.6, -0.1, 0.7],
                &[-0.8, 1.4, 0.2],
                &[0.0, -0.6, -0.9],
            ]),
            l(&[0, 0, 0, 0, 1, 1, 1, 1, 1, 0, 1, 0]),
        ),
        (
            "space-three-classes-wide",
            m(&[
                &[1.0, 0.2, -0.3],
                &[0.8, -0.1, 0.4],
                &[-0.5, 1.3, 0.2],
                &[-0.2, 0.9, -0.6],
                &[0.1, -0.4, 1.5],
                &[0.3, 0.2, 1.1],
            ]),
            l(&[0, 0, 1, 1, 2, 2]),
        ),
    ]
}

/// The fine-tuned accuracy table, transcribed by hand: one row per model,
/// columns in the order of `GT_DATASETS`.
pub const GT_DATASETS: [&str; 10] = [
    "aircraft", "caltech101", "cars", "cifar10", "cifar100", "flowers", "voc", "pets", "food", "dtd",
];

pub const GT_ROWS: [(&str, [f64; 10]); 12] = [
    ("BYOL", [82.1, 91.9, 89.83, 96.98, 83.86, 96.8, 85.13, 91.48, 85.44, 76.37]),
    ("Deepclusterv2", [82.43, 91.16, 90.16, 97.17, 84.84, 97.05, 85.38, 90.89, 87.24, 77.31]),
    ("Infomin", [83.78, 80.86, 86.9, 96.72, 70.89, 95.81, 81.41, 90.92, 78.82, 73.74]),
    ("InsDis", [79.7, 77.21, 80.21, 93.08, 69.08, 93.63, 76.33, 84.58, 76.47, 66.4]),
    ("MoCov1", [81.85, 79.68, 82.19, 84.15, 71.23, 94.32, 77.94, 85.26, 77.21, 67.36]),
    ("MoCov2", [83.7, 82.76, 85.55, 96.48, 71.27, 95.12, 78.32, 89.06, 77.15, 72.56]),
    ("PCLv1", [82.16, 88.6, 87.15, 86.42, 79.44, 95.62, 91.91, 88.93, 77.7, 73.28]),
    ("PCLv2", [83.0, 87.52, 85.56, 96.55, 79.84, 95.87, 81.85, 88.72, 80.29, 69.3]),
    ("Sela-v2", [85.42, 90.53, 89.85, 96.85, 84.36, 96.22, 85.52, 89.61, 86.37, 76.03]),
    ("SimCLRv1", [80.54, 90.94, 89.98, 97.09, 84.49, 95.33, 83.29, 88.53, 82.2, 73.97]),
    ("SimCLRv2", [81.5, 88.58, 88.82, 96.22, 78.91, 95.39, 83.08, 89.18, 82.23, 94.71]),
    ("Swav", [83.04, 89.49, 89.81, 96.81, 83.78, 97.11, 85.06, 90.59, 87.22, 76.68]),
];
