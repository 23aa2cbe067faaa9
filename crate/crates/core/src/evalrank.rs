//! Rank agreement between predicted transferability scores and fine-tuned
//! accuracies, plus a built-in table of fine-tuned accuracies of 12
//! self-supervised ResNet-50 checkpoints on 10 downstream datasets.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Embedded accuracy table, `model,dataset,accuracy` per line.
pub const EMBEDDED_CSV: &str = include_str!("../data/ground_truth.csv");

pub const DATASETS: [&str; 10] = [
    "aircraft",
    "caltech101",
    "cars",
    "cifar10",
    "cifar100",
    "flowers",
    "voc",
    "pets",
    "food",
    "dtd",
];

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_pair(g: &[f64], p: &[f64]) -> Result<()> {
    if g.len() != p.len() {
        return Err(Error::LengthMismatch {
            what: "predicted vs ground-truth scores",
            expected: g.len(),
            got: p.len(),
        });
    }
    if g.len() < 2 {
        return Err(Error::TooFewEntries {
            needed: 2,
            got: g.len(),
        });
    }
    Ok(())
}

/// `2 / (N (N-1)) Σ_{i<j} sign(G_i - G_j) sign(P_i - P_j)`. Ties contribute 0.
pub fn kendall_tau_w(g: &[f64], p: &[f64]) -> Result<f64> {
    check_pair(g, p)?;
    let n = g.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += sign(g[i] - g[j]) * sign(p[i] - p[j]);
        }
    }
    Ok(2.0 * sum / (n as f64 * (n as f64 - 1.0)))
}

/// Positions (0 = first) of each element when sorted by decreasing
/// `(primary, secondary)`.
fn decreasing_ranks(primary: &[f64], secondary: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..primary.len()).collect();
    // ascending lexicographic sort, then reversed
    order.sort_by(|&a, &b| {
        primary[a]
            .total_cmp(&primary[b])
            .then(secondary[a].total_cmp(&secondary[b]))
            .then(a.cmp(&b))
    });
    let mut rank = vec![0; primary.len()];
    for (pos, &idx) in order.iter().rev().enumerate() {
        rank[idx] = pos;
    }
    rank
}

fn hyperbolic_tau_ranked(x: &[f64], y: &[f64], rank: &[usize]) -> f64 {
    let w: Vec<f64> = rank.iter().map(|&r| 1.0 / (r as f64 + 1.0)).collect();
    let n = x.len();
    let (mut num, mut dx, mut dy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let wij = w[i] + w[j];
            let (sx, sy) = (sign(x[i] - x[j]), sign(y[i] - y[j]));
            num += wij * sx * sy;
            dx += wij * sx * sx;
            dy += wij * sy * sy;
        }
    }
    if dx == 0.0 || dy == 0.0 {
        return f64::NAN;
    }
    num / (dx.sqrt() * dy.sqrt())
}

/// Top-weighted variant: additive hyperbolic weights `1/(r+1)` on the
/// decreasing rank, averaged over ranking by either sequence. Common in
/// earlier transferability benchmarks; not the plain statistic above.
pub fn kendall_tau_hyperbolic(g: &[f64], p: &[f64]) -> Result<f64> {
    check_pair(g, p)?;
    let by_g = hyperbolic_tau_ranked(g, p, &decreasing_ranks(g, p));
    let by_p = hyperbolic_tau_ranked(p, g, &decreasing_ranks(p, g));
    Ok(0.5 * (by_g + by_p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauVariant {
    #[default]
    Pairwise,
    Hyperbolic,
}

impl TauVariant {
    pub fn compute(self, g: &[f64], p: &[f64]) -> Result<f64> {
        match self {
            TauVariant::Pairwise => kendall_tau_w(g, p),
            TauVariant::Hyperbolic => kendall_tau_hyperbolic(g, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRecord {
    pub model_id: String,
    pub predicted: f64,
    pub ground_truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub model_id: String,
    pub predicted: f64,
    pub ground_truth: f64,
    /// 1-based position by predicted score.
    pub predicted_rank: usize,
    /// 1-based position by ground truth.
    pub ground_truth_rank: usize,
    /// `ground_truth_rank - predicted_rank`; positive when the prediction
    /// places the model higher than it deserves.
    pub rank_delta: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingReport {
    pub tau_w: f64,
    pub tau_variant: TauVariant,
    /// Sorted by predicted score, best first.
    pub entries: Vec<RankedEntry>,
}

fn positions_descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut pos = vec![0; values.len()];
    for (p, &idx) in order.iter().enumerate() {
        pos[idx] = p + 1;
    }
    pos
}

pub fn rank_models(records: &[RankingRecord]) -> Result<RankingReport> {
    rank_models_with(records, TauVariant::Pairwise)
}

pub fn rank_models_with(records: &[RankingRecord], variant: TauVariant) -> Result<RankingReport> {
    if records.len() < 2 {
        return Err(Error::TooFewEntries {
            needed: 2,
            got: records.len(),
        });
    }
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.model_id.as_str()) {
            return Err(Error::DuplicateModel(r.model_id.clone()));
        }
        if !(r.predicted.is_finite() && r.ground_truth.is_finite()) {
            return Err(Error::Numerical(format!("non-finite score for model `{}`", r.model_id)));
        }
    }
    let g: Vec<f64> = records.iter().map(|r| r.ground_truth).collect();
    let p: Vec<f64> = records.iter().map(|r| r.predicted).collect();
    let tau_w = variant.compute(&g, &p)?;

    let p_pos = positions_descending(&p);
    let g_pos = positions_descending(&g);
    let mut entries: Vec<RankedEntry> = records
        .iter()
        .enumerate()
        .map(|(i, r)| RankedEntry {
            model_id: r.model_id.clone(),
            predicted: r.predicted,
            ground_truth: r.ground_truth,
            predicted_rank: p_pos[i],
            ground_truth_rank: g_pos[i],
            rank_delta: g_pos[i] as i64 - p_pos[i] as i64,
        })
        .collect();
    entries.sort_by_key(|e| e.predicted_rank);
    Ok(RankingReport {
        tau_w,
        tau_variant: variant,
        entries,
    })
}

/// Fine-tuned accuracy (percent) per model and dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTable {
    pub models: Vec<String>,
    pub datasets: Vec<String>,
    /// `accuracy[model][dataset]`, `None` where the source has no cell.
    pub accuracy: Vec<Vec<Option<f64>>>,
}

#[derive(Deserialize)]
struct CsvRow {
    model: String,
    dataset: String,
    accuracy: f64,
}

impl GroundTruthTable {
    /// The table shipped with the crate.
    pub fn embedded() -> &'static GroundTruthTable {
        static TABLE: OnceLock<GroundTruthTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            GroundTruthTable::from_csv_reader(EMBEDDED_CSV.as_bytes(), Path::new("<embedded>"))
                .expect("embedded ground-truth table parses")
        })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, path)
    }

    pub fn from_csv_reader(reader: impl Read, origin: &Path) -> Result<Self> {
        let mut table = GroundTruthTable {
            models: Vec::new(),
            datasets: Vec::new(),
            accuracy: Vec::new(),
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        for row in rdr.deserialize::<CsvRow>() {
            let row = row.map_err(|source| Error::Csv {
                path: origin.to_path_buf(),
                source,
            })?;
            let dataset = row.dataset.to_ascii_lowercase();
            let d = match table.datasets.iter().position(|x| *x == dataset) {
                Some(d) => d,
                None => {
                    table.datasets.push(dataset);
                    table.accuracy.iter_mut().for_each(|r| r.push(None));
                    table.datasets.len() - 1
                }
            };
            let m = match table.models.iter().position(|x| *x == row.model) {
                Some(m) => m,
                None => {
                    table.models.push(row.model);
                    table.accuracy.push(vec![None; table.datasets.len()]);
                    table.models.len() - 1
                }
            };
            table.accuracy[m][d] = Some(row.accuracy);
        }
        Ok(table)
    }

    /// `(model, accuracy)` for every model with a value on `dataset`.
    pub fn dataset(&self, dataset: &str) -> Result<Vec<(String, f64)>> {
        let key = dataset.to_ascii_lowercase();
        let d = self
            .datasets
            .iter()
            .position(|x| *x == key)
            .ok_or_else(|| Error::UnknownDataset {
                name: dataset.to_string(),
                valid: self.datasets.join(", "),
            })?;
        Ok(self
            .models
            .iter()
            .zip(&self.accuracy)
            .filter_map(|(m, row)| row[d].map(|a| (m.clone(), a)))
            .collect())
    }

    /// Case-insensitive lookup of one cell.
    pub fn get(&self, model: &str, dataset: &str) -> Option<f64> {
        let d = self.datasets.iter().position(|x| x.eq_ignore_ascii_case(dataset))?;
        let m = self.models.iter().position(|x| x.eq_ignore_ascii_case(model))?;
        self.accuracy[m][d]
    }
}

/// Ground truth for one of the embedded datasets.
pub fn load_ground_truth(dataset: &str) -> Result<Vec<(String, f64)>> {
    GroundTruthTable::embedded().dataset(dataset)
}
