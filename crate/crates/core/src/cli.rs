//! Command-line front end: score one pack, rank a zoo against ground truth,
//! dump refinement traces, generate synthetic packs, print ground truth.
//!
//! Every report is written to stdout and, with `--out`, to a file. JSON
//! reports carry a `config_echo` block holding every input that shaped them.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{NormSource, NormStats, PedConfig, LAMBDA_CANDIDATES};
use crate::dynamics::ped_run;
use crate::error::{Error, Result};
use crate::evalrank::{rank_models_with, GroundTruthTable, RankedEntry, RankingRecord, TauVariant};
use crate::io::{read_feature_pack, read_norm_stats, synth_clusters, write_feature_pack, FeaturePack, SynthSpec};
use crate::metrics::{score_with_ped, Metric, MetricParams, PedSummary};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ped", version, about = "Potential-energy feature refinement and transferability ranking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one feature pack with one or more metrics.
    Score(ScoreArgs),
    /// Score several packs and compare their order with ground truth.
    Rank(RankArgs),
    /// Per-step refinement diagnostics of one pack.
    Energy(EnergyArgs),
    /// Write a synthetic Gaussian-cluster feature pack.
    Synth(SynthArgs),
    /// Print the ground-truth accuracies of one dataset.
    Gt(GtArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PedMode {
    On,
    Off,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormArg {
    SelfStats,
    None,
    Stats(PathBuf),
}

impl FromStr for NormArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "self" => Ok(NormArg::SelfStats),
            "none" => Ok(NormArg::None),
            _ => match s.strip_prefix("stats:") {
                Some(path) if !path.is_empty() => Ok(NormArg::Stats(PathBuf::from(path))),
                _ => Err(format!("expected self, none or stats:<path>, got `{s}`")),
            },
        }
    }
}

/// Motion parameters shared by every command that runs the dynamics.
#[derive(Debug, Clone, Args, Serialize)]
pub struct MotionArgs {
    /// Elasticity coefficient.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Motion interval per step.
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    /// Maximum number of steps.
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
    /// Early-exit ratio.
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Normalization: self, none, or stats:<path to JSON>.
    #[arg(long, default_value = "self", value_parser = NormArg::from_str)]
    pub norm: NormArg,
}

impl MotionArgs {
    fn config(&self, lambda: f64) -> PedConfig {
        PedConfig {
            lambda,
            k: self.k,
            dt: self.dt,
            max_steps: self.steps,
            epsilon: self.epsilon,
            norm_source: match self.norm {
                NormArg::SelfStats => NormSource::SelfStats,
                NormArg::None => NormSource::None,
                NormArg::Stats(_) => NormSource::ExternalStats,
            },
        }
    }

    fn stats(&self) -> Result<Option<NormStats>> {
        match &self.norm {
            NormArg::Stats(path) => Ok(Some(read_norm_stats(path)?)),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PedArgs {
    /// Refine features before scoring: on, off, or both.
    #[arg(long, value_enum, default_value = "on")]
    pub ped: PedMode,
    /// Radius coefficients; each is scored separately.
    #[arg(long, value_delimiter = ',', default_values_t = LAMBDA_CANDIDATES.to_vec())]
    pub lambda: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub motion: MotionArgs,
}

impl PedArgs {
    /// `None` stands for an unrefined run.
    fn variants(&self) -> Vec<Option<PedConfig>> {
        let mut out = Vec::new();
        if matches!(self.ped, PedMode::Off | PedMode::Both) {
            out.push(None);
        }
        if matches!(self.ped, PedMode::On | PedMode::Both) {
            out.extend(self.lambda.iter().map(|&l| Some(self.motion.config(l))));
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.lambda.is_empty() {
            return Err(Error::InvalidConfig("--lambda needs at least one value".into()));
        }
        for v in self.variants().into_iter().flatten() {
            v.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn parse_metrics(names: &[String]) -> Result<Vec<Metric>> {
    if names.is_empty() {
        return Err(Error::InvalidConfig("--metric needs at least one value".into()));
    }
    names.iter().map(|n| n.parse()).collect()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub pack: PathBuf,
    /// logme, gbc or sfda; comma-separated for several.
    #[arg(long, value_delimiter = ',', default_value = "logme")]
    pub metric: Vec<String>,
    /// Shrinkage of the within-class scatter for sfda.
    #[arg(long, default_value_t = crate::metrics::DEFAULT_SHRINKAGE)]
    pub shrinkage: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub ped: PedArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RankArgs {
    /// Feature pack directories, comma-separated or repeated.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub packs: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "logme")]
    pub metric: Vec<String>,
    #[arg(long, default_value_t = crate::metrics::DEFAULT_SHRINKAGE)]
    pub shrinkage: f64,
    /// Dataset to look up; defaults to the packs' dataset name.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Ground-truth CSV (`model,dataset,accuracy`) instead of the built-in table.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Fail when a pack's model has no ground truth instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// pairwise (plain sign agreement) or hyperbolic (top-weighted).
    #[arg(long, value_enum, default_value = "pairwise")]
    pub tau: TauArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub ped: PedArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TauArg {
    Pairwise,
    Hyperbolic,
}

impl From<TauArg> for TauVariant {
    fn from(t: TauArg) -> Self {
        match t {
            TauArg::Pairwise => TauVariant::Pairwise,
            TauArg::Hyperbolic => TauVariant::Hyperbolic,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnergyArgs {
    #[arg(long)]
    pub pack: PathBuf,
    /// Radius coefficient.
    #[arg(long, default_value_t = LAMBDA_CANDIDATES[0])]
    pub lambda: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub motion: MotionArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 20)]
    pub per_class: usize,
    /// Half-width of the cube the class centers are drawn from.
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    /// Isotropic standard deviation around each center.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "synthetic")]
    pub model_name: String,
    #[arg(long, default_value = "synthetic")]
    pub dataset_name: String,
    /// Pack directory to create.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GtArgs {
    #[arg(long)]
    pub dataset: String,
    /// Read this CSV instead of the built-in table.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

/// Runs one parsed command, writing the report to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let (text, out) = match &cli.command {
        Command::Score(a) => (cmd_score(a)?, a.output.out.as_deref()),
        Command::Rank(a) => (cmd_rank(a)?, a.output.out.as_deref()),
        Command::Energy(a) => (cmd_energy(a)?, a.output.out.as_deref()),
        Command::Synth(a) => (cmd_synth(a)?, None),
        Command::Gt(a) => (cmd_gt(a)?, a.output.out.as_deref()),
    };
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))?;
    if let Some(path) = out {
        std::fs::write(path, text.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_VALIDATION
    }
}

/// Single-line JSON description of a failure, for stderr.
pub fn error_line(err: &Error) -> String {
    #[derive(Serialize)]
    struct Line<'a> {
        error: &'a str,
        reason: String,
    }
    let kind = if err.is_numerical() { "numerical" } else { "validation" };
    serde_json::to_string(&Line {
        error: kind,
        reason: err.to_string().replace('\n', " "),
    })
    .expect("error line serializes")
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct ScoreEntry {
    metric: String,
    lambda: Option<f64>,
    ped_applied: bool,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ped: Option<PedSummary>,
}

#[derive(Serialize)]
struct ScoreReport<'a> {
    command: &'static str,
    config_echo: &'a ScoreArgs,
    model_name: &'a str,
    dataset_name: &'a str,
    n: usize,
    d: usize,
    num_classes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    label_map: Option<&'a Vec<u32>>,
    results: Vec<ScoreEntry>,
}

fn score_pack(
    pack: &FeaturePack,
    metrics: &[Metric],
    variants: &[Option<PedConfig>],
    stats: Option<&NormStats>,
    params: &MetricParams,
) -> Result<Vec<ScoreEntry>> {
    let mut out = Vec::new();
    for &metric in metrics {
        for variant in variants {
            let s = score_with_ped(&pack.features, &pack.labels, metric, variant.as_ref(), stats, params)?;
            out.push(ScoreEntry {
                metric: s.metric_name,
                lambda: variant.as_ref().map(|c| c.lambda),
                ped_applied: s.ped_applied,
                value: s.value,
                ped: s.ped,
            });
        }
    }
    Ok(out)
}

pub fn cmd_score(args: &ScoreArgs) -> Result<String> {
    let metrics = parse_metrics(&args.metric)?;
    args.ped.validate()?;
    let stats = args.ped.motion.stats()?;
    let pack = read_feature_pack(&args.pack)?;
    let params = MetricParams {
        sfda_shrinkage: args.shrinkage,
    };
    let results = score_pack(&pack, &metrics, &args.ped.variants(), stats.as_ref(), &params)?;

    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => Ok(to_json(&ScoreReport {
            command: "score",
            config_echo: args,
            model_name: &pack.manifest.model_name,
            dataset_name: &pack.manifest.dataset_name,
            n: pack.manifest.n,
            d: pack.manifest.d,
            num_classes: pack.labels.num_classes(),
            label_map: pack.label_map.as_ref(),
            results,
        })),
        Format::Csv => {
            let mut s = String::from("metric,lambda,ped_applied,value,steps_taken\n");
            for r in &results {
                let steps = r.ped.as_ref().map(|p| p.steps_taken.to_string()).unwrap_or_default();
                writeln!(s, "{},{},{},{},{}", r.metric, fmt_opt(r.lambda), r.ped_applied, r.value, steps)
                    .expect("write to string");
            }
            Ok(s)
        }
    }
}

#[derive(Serialize)]
struct Ranking {
    metric: String,
    lambda: Option<f64>,
    ped_applied: bool,
    tau_w: f64,
    tau_variant: TauVariant,
    entries: Vec<RankedEntry>,
}

#[derive(Serialize)]
struct RankReport<'a> {
    command: &'static str,
    config_echo: &'a RankArgs,
    dataset: String,
    excluded: Vec<String>,
    rankings: Vec<Ranking>,
}

pub fn cmd_rank(args: &RankArgs) -> Result<String> {
    let metrics = parse_metrics(&args.metric)?;
    args.ped.validate()?;
    if args.packs.len() < 2 {
        return Err(Error::TooFewEntries {
            needed: 2,
            got: args.packs.len(),
        });
    }
    let stats = args.ped.motion.stats()?;
    let table = match &args.gt {
        Some(path) => GroundTruthTable::from_csv_path(path)?,
        None => GroundTruthTable::embedded().clone(),
    };
    let params = MetricParams {
        sfda_shrinkage: args.shrinkage,
    };
    let variants = args.ped.variants();

    // Packs are independent; collect keeps input order.
    let scored: Vec<(FeaturePack, Vec<ScoreEntry>)> = args
        .packs
        .par_iter()
        .map(|path| {
            let pack = read_feature_pack(path)?;
            let entries = score_pack(&pack, &metrics, &variants, stats.as_ref(), &params)?;
            Ok((pack, entries))
        })
        .collect::<Result<_>>()?;

    let dataset = match &args.dataset {
        Some(d) => d.clone(),
        None => {
            let first = &scored[0].0.manifest.dataset_name;
            if let Some((p, _)) = scored.iter().find(|(p, _)| !p.manifest.dataset_name.eq_ignore_ascii_case(first)) {
                return Err(Error::InvalidConfig(format!(
                    "packs disagree on dataset (`{first}` vs `{}`); pass --dataset",
                    p.manifest.dataset_name
                )));
            }
            first.clone()
        }
    };
    // unknown dataset is a hard error
    table.dataset(&dataset)?;

    let mut excluded = Vec::new();
    let mut kept = Vec::new();
    for (pack, entries) in &scored {
        match table.get(&pack.manifest.model_name, &dataset) {
            Some(gt) => kept.push((pack.manifest.model_name.clone(), gt, entries)),
            None => excluded.push(pack.manifest.model_name.clone()),
        }
    }
    if !excluded.is_empty() {
        if args.strict {
            return Err(Error::InvalidConfig(format!(
                "no ground truth on `{dataset}` for: {}",
                excluded.join(", ")
            )));
        }
        log::warn!("no ground truth on `{dataset}` for {}; excluded", excluded.join(", "));
    }

    let mut rankings = Vec::new();
    for slot in 0..metrics.len() * variants.len() {
        let records: Vec<RankingRecord> = kept
            .iter()
            .map(|(model, gt, entries)| RankingRecord {
                model_id: model.clone(),
                predicted: entries[slot].value,
                ground_truth: *gt,
            })
            .collect();
        let report = rank_models_with(&records, args.tau.into())?;
        let head = &scored[0].1[slot];
        rankings.push(Ranking {
            metric: head.metric.clone(),
            lambda: head.lambda,
            ped_applied: head.ped_applied,
            tau_w: report.tau_w,
            tau_variant: report.tau_variant,
            entries: report.entries,
        });
    }

    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => Ok(to_json(&RankReport {
            command: "rank",
            config_echo: args,
            dataset,
            excluded,
            rankings,
        })),
        Format::Csv => {
            let mut s = String::from(
                "metric,lambda,ped_applied,tau_w,model,predicted,ground_truth,predicted_rank,ground_truth_rank,rank_delta\n",
            );
            for r in &rankings {
                for e in &r.entries {
                    writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{},{}",
                        r.metric,
                        fmt_opt(r.lambda),
                        r.ped_applied,
                        r.tau_w,
                        e.model_id,
                        e.predicted,
                        e.ground_truth,
                        e.predicted_rank,
                        e.ground_truth_rank,
                        e.rank_delta
                    )
                    .expect("write to string");
                }
            }
            Ok(s)
        }
    }
}

#[derive(Serialize)]
struct EnergyRow {
    step: usize,
    omega: f64,
    potential_energy: f64,
    max_overlap: f64,
}

#[derive(Serialize)]
struct EnergyReport<'a> {
    command: &'static str,
    config_echo: &'a EnergyArgs,
    steps_taken: usize,
    rows: Vec<EnergyRow>,
    warnings: Vec<String>,
}

pub fn cmd_energy(args: &EnergyArgs) -> Result<String> {
    let config = args.motion.config(args.lambda);
    config.validate()?;
    let stats = args.motion.stats()?;
    let pack = read_feature_pack(&args.pack)?;
    let result = ped_run(&pack.features, &pack.labels, &config, stats.as_ref())?;
    let rows: Vec<EnergyRow> = result
        .omega_per_state()
        .into_iter()
        .zip(&result.energy_trace)
        .zip(&result.max_overlap_trace)
        .enumerate()
        .map(|(step, ((omega, &potential_energy), &max_overlap))| EnergyRow {
            step,
            omega,
            potential_energy,
            max_overlap,
        })
        .collect();

    match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::from("step,omega,potential_energy,max_overlap\n");
            for r in &rows {
                writeln!(s, "{},{},{},{}", r.step, r.omega, r.potential_energy, r.max_overlap)
                    .expect("write to string");
            }
            Ok(s)
        }
        Format::Json => Ok(to_json(&EnergyReport {
            command: "energy",
            config_echo: args,
            steps_taken: result.steps_taken,
            rows,
            warnings: result.warnings,
        })),
    }
}

pub fn cmd_synth(args: &SynthArgs) -> Result<String> {
    let spec = SynthSpec {
        c: args.classes,
        d: args.dim,
        per_class: args.per_class,
        center_spread: args.spread,
        sigma: args.sigma,
        seed: args.seed,
    };
    let data = synth_clusters(&spec)?;
    let manifest = write_feature_pack(&args.out, &data.features, &data.labels, &args.model_name, &args.dataset_name)?;

    #[derive(Serialize)]
    struct SynthReport<'a> {
        command: &'static str,
        config_echo: &'a SynthArgs,
        manifest: crate::io::FeaturePackManifest,
    }
    Ok(to_json(&SynthReport {
        command: "synth",
        config_echo: args,
        manifest,
    }))
}

pub fn cmd_gt(args: &GtArgs) -> Result<String> {
    let table = match &args.gt {
        Some(path) => GroundTruthTable::from_csv_path(path)?,
        None => GroundTruthTable::embedded().clone(),
    };
    let rows = table.dataset(&args.dataset)?;
    match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::from("model,accuracy\n");
            for (m, a) in &rows {
                writeln!(s, "{m},{a}").expect("write to string");
            }
            Ok(s)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                model: &'a str,
                accuracy: f64,
            }
            #[derive(Serialize)]
            struct GtReport<'a> {
                command: &'static str,
                config_echo: &'a GtArgs,
                dataset: String,
                entries: Vec<Row<'a>>,
            }
            Ok(to_json(&GtReport {
                command: "gt",
                config_echo: args,
                dataset: args.dataset.to_ascii_lowercase(),
                entries: rows.iter().map(|(m, a)| Row { model: m, accuracy: *a }).collect(),
            }))
        }
    }
}

/// Path helper for tests and callers that build argument lists.
pub fn path_arg(p: &Path) -> String {
    p.display().to_string()
}
