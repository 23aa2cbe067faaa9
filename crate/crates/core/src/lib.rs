//! Potential-energy refinement of class clusters in a pre-trained feature
//! space, transferability metrics over the refined features, and ranking
//! of a model zoo against fine-tuned ground truth.
//!
//! ```
//! use ped_core::{FeatureMatrix, LabelVector, PedConfig, ped_run};
//!
//! let z = FeatureMatrix::from_rows(&[[0.0, 0.0], [0.4, 0.1], [0.5, 0.0], [0.9, 0.2]]).unwrap();
//! let y = LabelVector::new(vec![0, 0, 1, 1]).unwrap();
//! let run = ped_run(&z, &y, &PedConfig::default(), None).unwrap();
//! assert_eq!(run.refined.rows(), 4);
//! ```

pub mod cli;
pub mod domain;
pub mod dynamics;
pub mod error;
pub mod evalrank;
pub mod io;
pub mod metrics;

pub use domain::{
    partition_by_class, ClusterBall, FeatureMatrix, LabelVector, NormSource, NormStats, PedConfig,
    K_GRID, LAMBDA_CANDIDATES, STD_FLOOR,
};
pub use dynamics::{ped_run, ped_run_observed, ped_step, ForceState, PedResult};
pub use error::{Error, Result};
pub use evalrank::{
    kendall_tau_hyperbolic, kendall_tau_w, load_ground_truth, rank_models, rank_models_with,
    GroundTruthTable, RankedEntry, RankingRecord, RankingReport, TauVariant,
};
pub use metrics::{evaluate, score_with_ped, Metric, MetricParams, MetricScore};
