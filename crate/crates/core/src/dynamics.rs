//! Potential energy decline: class clusters are modelled as elastic balls
//! that repel each other while they overlap, and every sample of a class is
//! translated rigidly with its ball for a few short motion intervals.
//!
//! One run goes: normalize the features, then repeat { fit one ball per
//! class, sum the Hooke forces between overlapping balls, convert them to
//! displacements `½·(F/m)·dt²` clamped to the largest overlap, move } until
//! the step budget is spent or the total displacement has decayed below
//! `epsilon` times the first one, and finally map back to the input space.
//!
//! All quantities are evaluated in the normalized space.

use serde::Serialize;

use crate::domain::{
    partition_by_class, ClusterBall, FeatureMatrix, LabelVector, NormSource, NormStats, PedConfig,
};
use crate::error::{Error, Result};

pub fn normalize(z: &FeatureMatrix, stats: &NormStats) -> Result<FeatureMatrix> {
    check_stats_dim(z, stats)?;
    let mut data = z.as_slice().to_vec();
    for row in data.chunks_exact_mut(z.cols()) {
        for ((v, m), s) in row.iter_mut().zip(&stats.mean).zip(&stats.std) {
            *v = (*v - m) / s;
        }
    }
    Ok(FeatureMatrix::from_parts_unchecked(z.rows(), z.cols(), data))
}

pub fn denormalize(z: &FeatureMatrix, stats: &NormStats) -> Result<FeatureMatrix> {
    check_stats_dim(z, stats)?;
    let mut data = z.as_slice().to_vec();
    for row in data.chunks_exact_mut(z.cols()) {
        for ((v, m), s) in row.iter_mut().zip(&stats.mean).zip(&stats.std) {
            *v = *v * s + m;
        }
    }
    Ok(FeatureMatrix::from_parts_unchecked(z.rows(), z.cols(), data))
}

fn check_stats_dim(z: &FeatureMatrix, stats: &NormStats) -> Result<()> {
    if stats.mean.len() != z.cols() || stats.std.len() != z.cols() {
        return Err(Error::DimensionMismatch {
            what: "normalization stats vs features",
            expected: z.cols(),
            got: stats.mean.len().min(stats.std.len()),
        });
    }
    Ok(())
}

/// One ball per class: mean, population std per dimension, and radius
/// `lambda * ||std||`. Mass is 1.
pub fn build_balls(z: &FeatureMatrix, y: &LabelVector, lambda: f64) -> Result<Vec<ClusterBall>> {
    let parts = partition_by_class(z, y)?;
    Ok(balls_from_partition(z, &parts, lambda))
}

fn balls_from_partition(z: &FeatureMatrix, parts: &[Vec<usize>], lambda: f64) -> Vec<ClusterBall> {
    let d = z.cols();
    parts
        .iter()
        .map(|rows| {
            let n = rows.len() as f64;
            let mut center = vec![0.0; d];
            for &r in rows {
                for (c, v) in center.iter_mut().zip(z.row(r)) {
                    *c += v;
                }
            }
            center.iter_mut().for_each(|c| *c /= n);

            let mut sigma = vec![0.0; d];
            for &r in rows {
                for ((s, v), c) in sigma.iter_mut().zip(z.row(r)).zip(&center) {
                    let dev = v - c;
                    *s += dev * dev;
                }
            }
            sigma.iter_mut().for_each(|s| *s = (*s / n).sqrt());

            let radius = lambda * l2_norm(&sigma);
            ClusterBall {
                center,
                sigma,
                radius,
                mass: 1.0,
                count: rows.len(),
            }
        })
        .collect()
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn center_distance(a: &ClusterBall, b: &ClusterBall) -> f64 {
    a.center
        .iter()
        .zip(&b.center)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Elastic deformation between two balls, `max(r_a + r_b - d_ab, 0)`.
pub fn overlap(a: &ClusterBall, b: &ClusterBall) -> f64 {
    (a.radius + b.radius - center_distance(a, b)).max(0.0)
}

/// Force exerted on `bi` by `bj`: `k * overlap` along the unit vector from
/// `c_j` to `c_i`. Coincident centers give no force since the direction is
/// undefined.
pub fn pairwise_force(bi: &ClusterBall, bj: &ClusterBall, k: f64) -> Vec<f64> {
    let d = center_distance(bi, bj);
    let x = (bi.radius + bj.radius - d).max(0.0);
    if x == 0.0 || d == 0.0 {
        return vec![0.0; bi.dim()];
    }
    let scale = k * x / d;
    bi.center
        .iter()
        .zip(&bj.center)
        .map(|(a, b)| scale * (a - b))
        .collect()
}

/// Distances and overlaps of all ball pairs, row-major `C x C`.
struct PairTable {
    c: usize,
    dist: Vec<f64>,
    overlap: Vec<f64>,
}

impl PairTable {
    fn new(balls: &[ClusterBall]) -> Self {
        let c = balls.len();
        let mut dist = vec![0.0; c * c];
        let mut overlap = vec![0.0; c * c];
        for i in 0..c {
            for j in i + 1..c {
                let d = center_distance(&balls[i], &balls[j]);
                let x = (balls[i].radius + balls[j].radius - d).max(0.0);
                dist[i * c + j] = d;
                dist[j * c + i] = d;
                overlap[i * c + j] = x;
                overlap[j * c + i] = x;
            }
        }
        Self { c, dist, overlap }
    }

    fn overlap(&self, i: usize, j: usize) -> f64 {
        self.overlap[i * self.c + j]
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.c + j]
    }

    fn max_overlaps(&self) -> Vec<f64> {
        (0..self.c)
            .map(|i| (0..self.c).map(|j| self.overlap(i, j)).fold(0.0, f64::max))
            .collect()
    }

    fn energy(&self, k: f64) -> f64 {
        // ordered pairs: each unordered pair counted twice
        self.overlap.iter().map(|x| 0.5 * k * x * x).sum()
    }

    fn coincident_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.c {
            for j in i + 1..self.c {
                if self.dist(i, j) == 0.0 && self.overlap(i, j) > 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Net force per ball. Each pair is evaluated once and applied with
    /// opposite signs to both members, in a fixed `i < j` order.
    fn forces(&self, balls: &[ClusterBall], k: f64) -> Vec<Vec<f64>> {
        let dim = balls.first().map_or(0, ClusterBall::dim);
        let mut forces = vec![vec![0.0; dim]; self.c];
        for i in 0..self.c {
            for j in i + 1..self.c {
                let x = self.overlap(i, j);
                let d = self.dist(i, j);
                if x == 0.0 || d == 0.0 {
                    continue;
                }
                let scale = k * x / d;
                let (head, tail) = forces.split_at_mut(j);
                let (fi, fj) = (&mut head[i], &mut tail[0]);
                for (((fi, fj), a), b) in fi
                    .iter_mut()
                    .zip(fj.iter_mut())
                    .zip(&balls[i].center)
                    .zip(&balls[j].center)
                {
                    let f = scale * (a - b);
                    *fi += f;
                    *fj -= f;
                }
            }
        }
        forces
    }
}

/// Sum of pairwise forces acting on every ball.
pub fn net_forces(balls: &[ClusterBall], k: f64) -> Vec<Vec<f64>> {
    PairTable::new(balls).forces(balls, k)
}

/// Largest overlap of each ball with any other ball.
pub fn max_overlaps(balls: &[ClusterBall]) -> Vec<f64> {
    PairTable::new(balls).max_overlaps()
}

/// Unclamped motion over one interval, `½ (F / m) dt²`.
pub fn raw_displacements(forces: &[Vec<f64>], balls: &[ClusterBall], dt: f64) -> Vec<Vec<f64>> {
    forces
        .iter()
        .zip(balls)
        .map(|(f, b)| {
            let scale = 0.5 * dt * dt / b.mass;
            f.iter().map(|v| v * scale).collect()
        })
        .collect()
}

/// Limits each displacement's length to the ball's largest overlap, keeping
/// its direction.
pub fn clamp_displacements(raw: &[Vec<f64>], limits: &[f64]) -> Vec<Vec<f64>> {
    raw.iter()
        .zip(limits)
        .map(|(s, &limit)| {
            let norm = l2_norm(s);
            if norm > limit {
                let scale = limit / norm;
                s.iter().map(|v| v * scale).collect()
            } else {
                s.clone()
            }
        })
        .collect()
}

/// Clamped displacement of each ball under `forces`.
pub fn displacements(forces: &[Vec<f64>], balls: &[ClusterBall], dt: f64) -> Vec<Vec<f64>> {
    let raw = raw_displacements(forces, balls, dt);
    clamp_displacements(&raw, &max_overlaps(balls))
}

/// Elastic potential energy `Σ_i Σ_{j≠i} ½ k x_ij²`.
pub fn potential_energy(balls: &[ClusterBall], k: f64) -> f64 {
    PairTable::new(balls).energy(k)
}

/// Everything computed for one configuration of the system before it moves.
#[derive(Debug, Clone, Serialize)]
pub struct ForceState {
    pub step: usize,
    pub balls: Vec<ClusterBall>,
    pub forces: Vec<Vec<f64>>,
    /// Clamped displacements that are applied.
    pub displacements: Vec<Vec<f64>>,
    /// Sum over clusters of the L1 norm of the unclamped displacement.
    pub omega: f64,
    pub potential_energy: f64,
    pub max_overlap: f64,
    /// Pairs that overlap but share a center; they exert no force.
    pub coincident_pairs: Vec<(usize, usize)>,
}

fn evaluate(z: &FeatureMatrix, parts: &[Vec<usize>], config: &PedConfig, step: usize) -> ForceState {
    let balls = balls_from_partition(z, parts, config.lambda);
    let table = PairTable::new(&balls);
    let forces = table.forces(&balls, config.k);
    let raw = raw_displacements(&forces, &balls, config.dt);
    let limits = table.max_overlaps();
    let omega = raw.iter().flatten().map(|v| v.abs()).sum();
    let displacements = clamp_displacements(&raw, &limits);
    ForceState {
        step,
        potential_energy: table.energy(config.k),
        max_overlap: limits.iter().copied().fold(0.0, f64::max),
        coincident_pairs: table.coincident_pairs(),
        balls,
        forces,
        displacements,
        omega,
    }
}

fn translate(z: &mut FeatureMatrix, parts: &[Vec<usize>], displacements: &[Vec<f64>]) {
    for (rows, s) in parts.iter().zip(displacements) {
        if s.iter().all(|v| *v == 0.0) {
            continue;
        }
        for &r in rows {
            for (v, ds) in z.row_mut(r).iter_mut().zip(s) {
                *v += ds;
            }
        }
    }
}

/// One motion interval on already normalized features.
pub fn ped_step(
    z_norm: &FeatureMatrix,
    y: &LabelVector,
    config: &PedConfig,
) -> Result<(FeatureMatrix, ForceState)> {
    let parts = partition_by_class(z_norm, y)?;
    let state = evaluate(z_norm, &parts, config, 0);
    let mut moved = z_norm.clone();
    translate(&mut moved, &parts, &state.displacements);
    Ok((moved, state))
}

#[derive(Debug, Clone, Serialize)]
pub struct PedResult {
    #[serde(skip)]
    pub refined: FeatureMatrix,
    pub steps_taken: usize,
    /// Termination statistic of every executed step; `[0.0]` when nothing moved.
    pub omega_trace: Vec<f64>,
    /// Potential energy of the initial state and after every step.
    pub energy_trace: Vec<f64>,
    /// Largest pairwise overlap, aligned with `energy_trace`.
    pub max_overlap_trace: Vec<f64>,
    /// Termination statistic of the final state (the step that was not taken).
    pub residual_omega: f64,
    pub warnings: Vec<String>,
}

impl PedResult {
    /// `omega` per visited state, aligned with `energy_trace`.
    pub fn omega_per_state(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.omega_trace.iter().take(self.steps_taken).copied().collect();
        out.push(self.residual_omega);
        out
    }
}

/// Resolves the statistics used to normalize `z` under `config`.
pub fn resolve_norm_stats(
    z: &FeatureMatrix,
    config: &PedConfig,
    external: Option<&NormStats>,
) -> Result<NormStats> {
    let stats = match config.norm_source {
        NormSource::ExternalStats => external.ok_or(Error::MissingNormStats)?.clone(),
        NormSource::SelfStats => NormStats::from_features(z),
        NormSource::None => NormStats::identity(z.cols()),
    };
    check_stats_dim(z, &stats)?;
    Ok(stats)
}

/// Full refinement run. See the module docs for the procedure.
pub fn ped_run(
    z: &FeatureMatrix,
    y: &LabelVector,
    config: &PedConfig,
    stats: Option<&NormStats>,
) -> Result<PedResult> {
    ped_run_observed(z, y, config, stats, |_| {})
}

/// [`ped_run`], calling `observer` on every evaluated state.
pub fn ped_run_observed(
    z: &FeatureMatrix,
    y: &LabelVector,
    config: &PedConfig,
    stats: Option<&NormStats>,
    mut observer: impl FnMut(&ForceState),
) -> Result<PedResult> {
    config.validate()?;
    let parts = partition_by_class(z, y)?;
    let stats = resolve_norm_stats(z, config, stats)?;
    let mut zn = normalize(z, &stats)?;

    let mut warnings = Vec::new();
    let mut note_coincident = |state: &ForceState| {
        for &(i, j) in &state.coincident_pairs {
            let msg = format!(
                "classes {i} and {j} overlap with coincident centers; no force applied (step {})",
                state.step
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    };

    let mut state = evaluate(&zn, &parts, config, 0);
    observer(&state);
    note_coincident(&state);
    let mut energy_trace = vec![state.potential_energy];
    let mut max_overlap_trace = vec![state.max_overlap];

    let omega0 = state.omega;
    if omega0 == 0.0 {
        return Ok(PedResult {
            refined: z.clone(),
            steps_taken: 0,
            omega_trace: vec![0.0],
            energy_trace,
            max_overlap_trace,
            residual_omega: 0.0,
            warnings,
        });
    }

    let mut omega_trace = Vec::with_capacity(config.max_steps);
    let mut steps_taken = 0;
    while steps_taken < config.max_steps {
        translate(&mut zn, &parts, &state.displacements);
        steps_taken += 1;
        omega_trace.push(state.omega);
        let stop = state.omega <= config.epsilon * omega0;

        state = evaluate(&zn, &parts, config, steps_taken);
        observer(&state);
        note_coincident(&state);
        energy_trace.push(state.potential_energy);
        max_overlap_trace.push(state.max_overlap);
        if stop {
            break;
        }
    }

    Ok(PedResult {
        refined: denormalize(&zn, &stats)?,
        steps_taken,
        omega_trace,
        energy_trace,
        max_overlap_trace,
        residual_omega: state.omega,
        warnings,
    })
}
