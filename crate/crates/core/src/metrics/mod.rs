//! Transferability metrics mapping `(features, labels)` to a scalar score,
//! optionally after refining the features with the cluster dynamics.

mod gbc;
mod logme;
mod sfda;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use gbc::{bhattacharyya, gbc, DiagGaussian, VARIANCE_FLOOR};
pub use logme::{logme, logme_fit, EvidenceFit, LogmeFit};
pub use sfda::{
    discriminants, regularized_within, scatter_matrices, sfda, sfda_fit, sfda_score, FdaModel,
    DEFAULT_SHRINKAGE,
};

use crate::domain::{FeatureMatrix, LabelVector, NormStats, PedConfig};
use crate::dynamics::ped_run;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Logme,
    Gbc,
    Sfda,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Logme, Metric::Gbc, Metric::Sfda];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Logme => "logme",
            Metric::Gbc => "gbc",
            Metric::Sfda => "sfda",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logme" => Ok(Metric::Logme),
            "gbc" => Ok(Metric::Gbc),
            "sfda" => Ok(Metric::Sfda),
            _ => Err(Error::UnknownMetric { name: s.to_string() }),
        }
    }
}

/// Metric-specific knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub sfda_shrinkage: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            sfda_shrinkage: DEFAULT_SHRINKAGE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub ped: Option<PedConfig>,
    pub metric_params: MetricParams,
}

/// Diagnostics of the refinement that preceded scoring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PedSummary {
    pub steps_taken: usize,
    pub omega_trace: Vec<f64>,
    pub energy_trace: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricScore {
    pub metric_name: String,
    pub value: f64,
    pub ped_applied: bool,
    pub config_echo: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ped: Option<PedSummary>,
}

/// Raw metric value on the given features.
pub fn evaluate(z: &FeatureMatrix, y: &LabelVector, metric: Metric, params: &MetricParams) -> Result<f64> {
    let value = match metric {
        Metric::Logme => logme(z, y)?,
        Metric::Gbc => gbc(z, y)?,
        Metric::Sfda => sfda(z, y, params.sfda_shrinkage)?,
    };
    if !value.is_finite() {
        return Err(Error::Numerical(format!("{metric} produced a non-finite score ({value})")));
    }
    Ok(value)
}

/// Scores `(z, y)` with `metric`, refining the features first when a
/// refinement config is given.
pub fn score_with_ped(
    z: &FeatureMatrix,
    y: &LabelVector,
    metric: Metric,
    ped: Option<&PedConfig>,
    stats: Option<&NormStats>,
    params: &MetricParams,
) -> Result<MetricScore> {
    let (value, summary) = match ped {
        Some(config) => {
            let run = ped_run(z, y, config, stats)?;
            let value = evaluate(&run.refined, y, metric, params)?;
            let summary = PedSummary {
                steps_taken: run.steps_taken,
                omega_trace: run.omega_trace,
                energy_trace: run.energy_trace,
                warnings: run.warnings,
            };
            (value, Some(summary))
        }
        None => (evaluate(z, y, metric, params)?, None),
    };
    Ok(MetricScore {
        metric_name: metric.name().to_string(),
        value,
        ped_applied: ped.is_some(),
        config_echo: ConfigEcho {
            ped: ped.cloned(),
            metric_params: params.clone(),
        },
        ped: summary,
    })
}
