//! Reproducible experiment sweeps.
//!
//! A sweep evaluates one random model for a list of dimension functions over
//! a number of independent trials. Trial `t` always receives the seed
//! `derive_seed(master_seed, t, tag)` where `tag` names the model kind, the
//! sampled object of a trial is shared by every `φ` in the list, and rows are
//! sorted by `(φ index, trial)` before anything is aggregated or written. The
//! worker count therefore changes wall time only.
//!
//! Configs are JSON; results are CSV. Both carry a `schema_version`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::carpet::{BandPolicy, CarpetEntry, CarpetFamily};
use crate::dimfunc::{Classification, DimensionFunction, MonotoneCheck, PhiFamily, Summability};
use crate::error::{Error, Result};
use crate::gwtree::{percolation_offspring, GapMode, GwTree, OffspringDistribution, DEFAULT_NODE_CAP};
use crate::onevar_ss::{IfsEntry, IfsFamily};

pub use crate::rng::derive_seed;

pub const SCHEMA_VERSION: u32 = 1;

/// Retries allowed per trial when trees are conditioned on survival.
pub const SURVIVAL_RETRIES: u32 = 1000;

/// The random model a sweep samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Gw {
        probs: Vec<f64>,
        #[serde(default = "default_base")]
        metric_base: f64,
    },
    Percolation {
        n: u32,
        d: u32,
        p: f64,
    },
    Selfsimilar {
        entries: Vec<IfsEntry>,
    },
    Carpet {
        entries: Vec<CarpetEntry>,
    },
}

fn default_base() -> f64 {
    2.0
}

fn default_true() -> bool {
    true
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Gw { .. } => "gw",
            ModelSpec::Percolation { .. } => "percolation",
            ModelSpec::Selfsimilar { .. } => "selfsimilar",
            ModelSpec::Carpet { .. } => "carpet",
        }
    }
}

/// What is measured on each sampled object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// The `φ`-Assouad estimate over `k_range`.
    #[default]
    Spectrum,
    /// Extreme-run events (self-similar and carpet models only).
    Runs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub model: ModelSpec,
    /// Dimension functions, in `zero`, `const:c`, `power:θ`, `loglog:C` form.
    #[serde(default)]
    pub phi: Vec<DimensionFunction>,
    /// Extra `loglog:C` entries appended after `phi`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loglog_multipliers: Vec<f64>,
    /// Tree depth or coding length.
    pub depth_or_length: usize,
    pub trials: u64,
    pub master_seed: u64,
    pub k_range: [usize; 2],
    #[serde(default = "default_mode")]
    pub mode: GapMode,
    #[serde(default)]
    pub task: Task,
    /// Tolerance of the self-similar extreme set.
    #[serde(default)]
    pub eps: f64,
    #[serde(default)]
    pub band: BandPolicy,
    /// Condition trees on survival to full depth.
    #[serde(default = "default_true")]
    pub survive: bool,
    /// Not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_mode() -> GapMode {
    GapMode::ExactGap
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Every dimension function of the sweep, in row order.
    pub fn phi_list(&self) -> Result<Vec<DimensionFunction>> {
        let mut all = self.phi.clone();
        for &c in &self.loglog_multipliers {
            all.push(DimensionFunction::new(PhiFamily::LogLog(c)).map_err(|e| Error::Config(e.to_string()))?);
        }
        Ok(all)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {}", self.schema_version));
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.depth_or_length < 1 {
            return bad("depth_or_length must be at least 1".into());
        }
        if self.k_range[0] > self.k_range[1] {
            return bad(format!("empty k_range {:?}", self.k_range));
        }
        if self.phi_list()?.is_empty() {
            return bad("phi list is empty".into());
        }
        if self.task == Task::Runs && matches!(self.model, ModelSpec::Gw { .. } | ModelSpec::Percolation { .. }) {
            return bad("task 'runs' needs a selfsimilar or carpet model".into());
        }
        self.build_model().map(|_| ())
    }

    /// Short hex digest of every field except `output`.
    pub fn config_hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.output = None;
        content_hash(&semantic)
    }

    fn build_model(&self) -> Result<Model> {
        let config_err = |e: Error| Error::Config(e.to_string());
        Ok(match &self.model {
            ModelSpec::Gw { probs, metric_base } => {
                Model::Tree(OffspringDistribution::new(probs.clone(), *metric_base).map_err(config_err)?)
            }
            ModelSpec::Percolation { n, d, p } => Model::Tree(percolation_offspring(*n, *d, *p).map_err(config_err)?),
            ModelSpec::Selfsimilar { entries } => Model::SelfSimilar(IfsFamily::new(entries.clone()).map_err(config_err)?),
            ModelSpec::Carpet { entries } => Model::Carpet(CarpetFamily::new(entries.clone()).map_err(config_err)?),
        })
    }
}

/// First 16 hex digits of the SHA-256 of the value's JSON encoding.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    let digest = Sha256::digest(&bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

enum Model {
    Tree(OffspringDistribution),
    SelfSimilar(IfsFamily),
    Carpet(CarpetFamily),
}

/// Outcome of one `(φ, trial)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Extinct,
    NoPair,
    Error,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Ok => "ok",
            RowStatus::Extinct => "extinct",
            RowStatus::NoPair => "no_pair",
            RowStatus::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub phi_index: usize,
    pub phi: String,
    pub trial: u64,
    pub seed: u64,
    pub status: RowStatus,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub log_count: Option<f64>,
    pub s_hat: Option<f64>,
    pub runs: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub phi: String,
    pub ok_trials: u64,
    pub flagged_trials: u64,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub q25: Option<f64>,
    pub median: Option<f64>,
    pub q75: Option<f64>,
    pub total_runs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub schema_version: u32,
    pub config_hash: String,
    pub master_seed: u64,
    pub build: String,
    pub model: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<Aggregate>,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn aggregate(&self, phi_index: usize) -> &Aggregate {
        &self.aggregates[phi_index]
    }
}

/// Run every `(φ, trial)` cell, on a pool of `threads` workers (all cores when
/// `None`), and write the CSV when the config names an output path.
pub fn run_sweep(config: &ExperimentConfig, threads: Option<usize>) -> Result<SweepResult> {
    config.validate()?;
    let model = config.build_model()?;
    let phis = config.phi_list()?;
    let tag = config.model.kind();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;

    let per_trial: Vec<Vec<SweepRow>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = derive_seed(config.master_seed, trial, tag);
                run_trial(config, &model, &phis, trial, seed)
            })
            .collect()
    });
    let mut rows: Vec<SweepRow> = per_trial.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.phi_index, r.trial));

    let aggregates = phis.iter().enumerate().map(|(i, phi)| aggregate(phi, i, &rows)).collect();
    let result = SweepResult {
        rows,
        aggregates,
        provenance: Provenance {
            schema_version: SCHEMA_VERSION,
            config_hash: config.config_hash(),
            master_seed: config.master_seed,
            build: concat!(env!("CARGO_PKG_NAME"), "-", env!("CARGO_PKG_VERSION")).to_string(),
            model: tag,
        },
    };
    if let Some(path) = &config.output {
        emit_csv(&result, path)?;
    }
    Ok(result)
}

fn run_trial(config: &ExperimentConfig, model: &Model, phis: &[DimensionFunction], trial: u64, seed: u64) -> Vec<SweepRow> {
    let blank = |i: usize, status: RowStatus| SweepRow {
        phi_index: i,
        phi: phis[i].to_string(),
        trial,
        seed,
        status,
        k: None,
        l: None,
        log_count: None,
        s_hat: None,
        runs: None,
    };
    let flag_all = |err: &Error| -> Vec<SweepRow> { (0..phis.len()).map(|i| blank(i, status_of(err))).collect() };
    let range = config.k_range[0]..=config.k_range[1];
    let len = config.depth_or_length;

    match model {
        Model::Tree(dist) => {
            let tree = if config.survive {
                GwTree::condition_on_survival(dist, len, seed, SURVIVAL_RETRIES, DEFAULT_NODE_CAP)
            } else {
                GwTree::simulate(dist, len, seed, DEFAULT_NODE_CAP)
            };
            let tree = match tree {
                Ok(t) => t,
                Err(e) => return flag_all(&e),
            };
            if tree.extinct_at().is_some() {
                return (0..phis.len()).map(|i| blank(i, RowStatus::Extinct)).collect();
            }
            phis.iter()
                .enumerate()
                .map(|(i, phi)| match tree.phi_assouad_estimate(phi, range.clone(), config.mode) {
                    Ok(est) => SweepRow {
                        k: Some(est.witness.k),
                        l: Some(est.witness.l),
                        log_count: Some((est.witness.count as f64).ln()),
                        s_hat: Some(est.s_hat),
                        ..blank(i, RowStatus::Ok)
                    },
                    Err(e) => blank(i, status_of(&e)),
                })
                .collect()
        }
        Model::SelfSimilar(family) => {
            let coding = match family.sample_coding(len, seed) {
                Ok(c) => c,
                Err(e) => return flag_all(&e),
            };
            phis.iter()
                .enumerate()
                .map(|(i, phi)| match config.task {
                    Task::Runs => SweepRow {
                        runs: Some(coding.detect_runs(phi, config.eps).len() as u64),
                        ..blank(i, RowStatus::Ok)
                    },
                    Task::Spectrum => match coding.phi_assouad_estimate(phi, range.clone()) {
                        Ok(est) => SweepRow {
                            k: Some(est.witness.k),
                            l: Some(est.witness.l),
                            log_count: Some(est.witness.log_count),
                            s_hat: Some(est.s_hat),
                            ..blank(i, RowStatus::Ok)
                        },
                        Err(e) => blank(i, status_of(&e)),
                    },
                })
                .collect()
        }
        Model::Carpet(family) => {
            let coding = match family.sample_coding(len, seed) {
                Ok(c) => c,
                Err(e) => return flag_all(&e),
            };
            phis.iter()
                .enumerate()
                .map(|(i, phi)| match config.task {
                    Task::Runs => SweepRow {
                        runs: Some(coding.detect_two_block_runs(phi).len() as u64),
                        ..blank(i, RowStatus::Ok)
                    },
                    Task::Spectrum => match coding.phi_assouad_estimate(phi, range.clone(), config.band) {
                        Ok(est) => SweepRow {
                            k: Some(est.k),
                            l: Some(est.window.small.1),
                            log_count: Some(est.window.log_count),
                            s_hat: Some(est.s_hat),
                            ..blank(i, RowStatus::Ok)
                        },
                        Err(e) => blank(i, status_of(&e)),
                    },
                })
                .collect()
        }
    }
}

fn status_of(err: &Error) -> RowStatus {
    match err {
        Error::AllExtinct | Error::ExtinctionPersistent { .. } => RowStatus::Extinct,
        Error::NoAdmissiblePair | Error::PhiExceedsAffinityBand { .. } => RowStatus::NoPair,
        _ => RowStatus::Error,
    }
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn aggregate(phi: &DimensionFunction, phi_index: usize, rows: &[SweepRow]) -> Aggregate {
    let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.phi_index == phi_index).collect();
    // Rows are already in trial order, so the sum below is order-fixed.
    let values: Vec<f64> = mine.iter().filter_map(|r| r.s_hat).collect();
    let ok_trials = mine.iter().filter(|r| r.status == RowStatus::Ok).count() as u64;
    let total_runs = mine.iter().filter_map(|r| r.runs).sum();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let stat = |f: &dyn Fn(&[f64]) -> f64| (!sorted.is_empty()).then(|| f(&sorted));
    Aggregate {
        phi: phi.to_string(),
        ok_trials,
        flagged_trials: mine.len() as u64 - ok_trials,
        mean: stat(&|_| values.iter().sum::<f64>() / values.len() as f64),
        min: stat(&|s| s[0]),
        max: stat(&|s| s[s.len() - 1]),
        q25: stat(&|s| quantile(s, 0.25)),
        median: stat(&|s| quantile(s, 0.5)),
        q75: stat(&|s| quantile(s, 0.75)),
        total_runs,
    }
}

/// Decimal rendering with at most 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("round trip");
    let a = rounded.abs();
    if (1e-6..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

pub const CSV_COLUMNS: [&str; 12] = [
    "schema_version",
    "config_hash",
    "model",
    "phi",
    "trial",
    "seed",
    "status",
    "k",
    "l",
    "log_count",
    "s_hat",
    "runs",
];

/// Serialise rows with [`CSV_COLUMNS`], LF line endings.
pub fn csv_bytes(result: &SweepResult) -> Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    let p = &result.provenance;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in &result.rows {
        w.write_record([
            p.schema_version.to_string(),
            p.config_hash.clone(),
            p.model.to_string(),
            r.phi.clone(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.status.to_string(),
            opt(r.k.map(|v| v.to_string())),
            opt(r.l.map(|v| v.to_string())),
            opt(r.log_count.map(fmt_sig)),
            opt(r.s_hat.map(fmt_sig)),
            opt(r.runs.map(|v| v.to_string())),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let bytes = csv_bytes(result)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// A CSV writer with the crate's conventions (LF terminator, minimal quoting).
pub fn csv_writer<W: Write>(inner: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(inner)
}

/// Summary of a dimension function's regime.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiReport {
    pub phi: DimensionFunction,
    pub classification: Classification,
    pub monotone: MonotoneCheck,
    pub regime: &'static str,
}

impl fmt::Display for PhiReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sum = match self.classification.summability {
            Summability::Convergent => "Convergent",
            Summability::Divergent => "Divergent",
        };
        writeln!(f, "phi: {}", self.phi)?;
        writeln!(
            f,
            "summability: {sum}{}",
            if self.classification.heuristic { " (partial-sum trend)" } else { "" }
        )?;
        match self.monotone {
            MonotoneCheck::Ok => writeln!(f, "monotone: ok")?,
            MonotoneCheck::Violation { log_scale, quantity, .. } => {
                writeln!(f, "monotone: violated ({quantity:?}) at |log x| = {}", fmt_sig(log_scale))?
            }
        }
        write!(f, "regime: {}", self.regime)
    }
}

/// Grid size used by [`classify_phi_cmd`] for the monotonicity scan.
pub const MONOTONE_GRID: usize = 4096;

pub fn classify_phi_cmd(spec: &str) -> Result<PhiReport> {
    let phi: DimensionFunction = spec.parse()?;
    let classification = phi.classify_summability();
    let monotone = phi.validate_monotone(MONOTONE_GRID);
    let regime = match classification.summability {
        Summability::Divergent => "Assouad regime (up to constant)",
        Summability::Convergent => "quasi-Assouad regime",
    };
    Ok(PhiReport { phi, classification, monotone, regime })
}

/// Names and JSON texts of the bundled experiment configs.
pub const PACKAGED: [(&str, &str); 5] = [
    ("gw-transition", include_str!("../configs/gw-transition.json")),
    ("ss-convergent", include_str!("../configs/ss-convergent.json")),
    ("ss-divergent", include_str!("../configs/ss-divergent.json")),
    ("carpet-qa", include_str!("../configs/carpet-qa.json")),
    ("carpet-events", include_str!("../configs/carpet-events.json")),
];

pub fn packaged(name: &str) -> Result<ExperimentConfig> {
    let (_, text) = PACKAGED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("no packaged config named '{name}'")))?;
    ExperimentConfig::from_json(text)
}
