//! `fsl`: command-line front end for simulations, dimension formulas and sweeps.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fsl_core::carpet::{example_templates, BandPolicy, CarpetEntry, CarpetFamily};
use fsl_core::gwtree::{
    chernoff_tail_empirical, percolation_offspring, theoretical_dims, GapMode, GwTree, OffspringDistribution,
    DEFAULT_NODE_CAP,
};
use fsl_core::harness::{
    classify_phi_cmd, content_hash, csv_bytes, csv_writer, fmt_sig, packaged, run_sweep, ExperimentConfig,
};
use fsl_core::ldp::BoundedDiscreteRV;
use fsl_core::onevar_ss::IfsFamily;
use fsl_core::{derive_seed, DimensionFunction, Error, ErrorKind, Result};

const DEFAULT_SEED: u64 = 1729;

#[derive(Parser)]
#[command(name = "fsl", version, about = "Symbolic simulation of random fractals")]
struct Cli {
    /// Experiment config (JSON), used by `sweep`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, env = "FSL_SEED")]
    seed: Option<u64>,
    /// Worker threads; affects speed only.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one tree and print its generation sizes.
    GwSim(GwSimArgs),
    /// Estimate the phi-Assouad spectrum on Galton-Watson trees.
    GwSpectrum(GwSpectrumArgs),
    /// Monte Carlo estimate of P(Z_k >= m^{(1+eps)k}).
    GwTail(GwTailArgs),
    /// Dimension formulas of a self-similar family.
    SsDims(SsFamilyArgs),
    /// Estimate the phi-Assouad spectrum on sampled self-similar codings.
    SsSpectrum(SsSampleArgs),
    /// Count extreme runs on sampled self-similar codings.
    SsRuns(SsSampleArgs),
    /// Dimension formulas and the Assouad spectrum of a carpet family.
    CarpetDims(CarpetDimsArgs),
    /// Estimate the phi-Assouad spectrum on sampled carpet codings.
    CarpetSpectrum(CarpetSampleArgs),
    /// Count two-block events on sampled carpet codings.
    CarpetRuns(CarpetSampleArgs),
    /// Rate function, Chernoff bound and Monte Carlo tail.
    LdpRate(LdpArgs),
    /// Summability class and regime prediction for a dimension function.
    ClassifyPhi {
        /// `zero`, `const:c`, `power:theta` or `loglog:C`.
        phi: String,
    },
    /// Run an experiment config (from --config or --packaged).
    Sweep {
        /// Name of a bundled config, e.g. `gw-transition`.
        #[arg(long)]
        packaged: Option<String>,
    },
}

#[derive(Args)]
struct OffspringArgs {
    /// Offspring pmf theta_0,theta_1,...
    #[arg(long, value_delimiter = ',', conflicts_with = "percolation")]
    probs: Option<Vec<f64>>,
    /// Metric base b.
    #[arg(long, default_value_t = 2.0)]
    base: f64,
    /// Fractal percolation `n,d,p` instead of an explicit pmf.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    percolation: Option<Vec<f64>>,
}

impl OffspringArgs {
    fn build(&self) -> Result<(OffspringDistribution, String)> {
        if let Some(p) = &self.percolation {
            let (n, d) = (p[0] as u32, p[1] as u32);
            if n as f64 != p[0] || d as f64 != p[1] {
                return Err(Error::Config("percolation n and d must be integers".into()));
            }
            return Ok((percolation_offspring(n, d, p[2])?, format!("percolation({n};{d};{})", p[2])));
        }
        let probs = self.probs.clone().ok_or_else(|| Error::Config("give --probs or --percolation".into()))?;
        let label = format!("gw({})", probs.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";"));
        Ok((OffspringDistribution::new(probs, self.base)?, label))
    }
}

#[derive(Args)]
struct GwSimArgs {
    #[command(flatten)]
    offspring: OffspringArgs,
    #[arg(long, default_value_t = 20)]
    depth: usize,
    /// Retry with seeds seed+1, ... until the tree survives.
    #[arg(long)]
    survive: bool,
}

#[derive(Args)]
struct GwSpectrumArgs {
    #[command(flatten)]
    offspring: OffspringArgs,
    #[arg(long, default_value_t = 30)]
    depth: usize,
    #[arg(long, default_value = "loglog:1")]
    phi: DimensionFunction,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// `exact_gap` or `at_least_gap`.
    #[arg(long, default_value = "exact_gap")]
    mode: GapMode,
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    /// Defaults to the depth.
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Args)]
struct GwTailArgs {
    #[command(flatten)]
    offspring: OffspringArgs,
    /// Generations to test.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
}

#[derive(Args)]
struct SsFamilyArgs {
    /// `N:c:p,N:c:p,...` or a JSON file.
    #[arg(long, default_value = "2:0.5:0.5,2:0.25:0.5")]
    family: String,
    /// Accept almost deterministic families.
    #[arg(long)]
    allow_degenerate: bool,
}

#[derive(Args)]
struct SsSampleArgs {
    #[command(flatten)]
    family: SsFamilyArgs,
    #[arg(long, default_value_t = 10_000)]
    length: usize,
    #[arg(long, default_value = "loglog:1")]
    phi: DimensionFunction,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    /// Defaults to the coding length.
    #[arg(long)]
    k_max: Option<usize>,
    /// Extreme-set tolerance for runs.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
}

#[derive(Args)]
struct CarpetFamilyArgs {
    /// JSON file or inline JSON; `f1`, `f2` or `f1+f2` for the example templates.
    #[arg(long, default_value = "f1+f2")]
    family: String,
}

#[derive(Args)]
struct CarpetDimsArgs {
    #[command(flatten)]
    family: CarpetFamilyArgs,
    /// Spectrum arguments.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.75,0.9")]
    theta: Vec<f64>,
}

#[derive(Args)]
struct CarpetSampleArgs {
    #[command(flatten)]
    family: CarpetFamilyArgs,
    #[arg(long, default_value_t = 10_000)]
    length: usize,
    #[arg(long, default_value = "loglog:1")]
    phi: DimensionFunction,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    #[arg(long)]
    k_max: Option<usize>,
    /// Skip scales outside the affinity band instead of rejecting them.
    #[arg(long)]
    ignore_band: bool,
}

#[derive(Args)]
struct LdpArgs {
    /// `v:p,v:p,...`
    #[arg(long, default_value = "-1:0.5,1:0.5")]
    atoms: String,
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    a: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    n: u64,
    /// Monte Carlo trials; 0 skips the simulation.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Model => 3,
                ErrorKind::Io => 4,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let out = cli.out.as_deref();
    match &cli.command {
        Command::GwSim(a) => gw_sim(a, seed, out),
        Command::GwSpectrum(a) => gw_spectrum(a, seed, out),
        Command::GwTail(a) => gw_tail(a, seed, out),
        Command::SsDims(a) => ss_dims(a, out),
        Command::SsSpectrum(a) => ss_sample(a, seed, out, false),
        Command::SsRuns(a) => ss_sample(a, seed, out, true),
        Command::CarpetDims(a) => carpet_dims(a, out),
        Command::CarpetSpectrum(a) => carpet_sample(a, seed, out, false),
        Command::CarpetRuns(a) => carpet_sample(a, seed, out, true),
        Command::LdpRate(a) => ldp_rate(a, seed, out),
        Command::ClassifyPhi { phi } => {
            let report = classify_phi_cmd(phi)?;
            write_out(out, format!("{report}\n").as_bytes())
        }
        Command::Sweep { packaged: name } => sweep(cli, name.as_deref(), out),
    }
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

/// Collects CSV records in memory, then writes them in one go.
struct Table(csv::Writer<Vec<u8>>);

impl Table {
    fn new(header: &[&str]) -> Result<Self> {
        let mut w = csv_writer(Vec::new());
        w.write_record(header)?;
        Ok(Self(w))
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        Ok(self.0.write_record(fields)?)
    }

    fn finish(self, out: Option<&Path>) -> Result<()> {
        let bytes = self.0.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        write_out(out, &bytes)
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn gw_sim(a: &GwSimArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let (dist, _) = a.offspring.build()?;
    let tree = if a.survive {
        GwTree::condition_on_survival(&dist, a.depth, seed, 1000, DEFAULT_NODE_CAP)?
    } else {
        GwTree::simulate(&dist, a.depth, seed, DEFAULT_NODE_CAP)?
    };
    let mut t = Table::new(&["seed", "level", "population", "normalized"])?;
    for k in 0..=a.depth {
        t.row(&[tree.seed().to_string(), k.to_string(), tree.population(k).to_string(), fmt_sig(tree.normalized_population(k))])?;
    }
    t.finish(out)
}

fn gw_spectrum(a: &GwSpectrumArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let (dist, label) = a.offspring.build()?;
    let dims = theoretical_dims(&dist)?;
    let k_max = a.k_max.unwrap_or(a.depth);
    let mut t = Table::new(&["model", "seed", "trial", "k", "gap", "count", "s_hat", "box_dim", "assouad_dim"])?;
    for trial in 0..a.trials {
        let s = derive_seed(seed, trial, "gw");
        let tree = GwTree::condition_on_survival(&dist, a.depth, s, 1000, DEFAULT_NODE_CAP)?;
        let est = tree.phi_assouad_estimate(&a.phi, a.k_min..=k_max, a.mode)?;
        t.row(&[
            label.clone(),
            tree.seed().to_string(),
            trial.to_string(),
            est.witness.k.to_string(),
            (est.witness.l - est.witness.k).to_string(),
            est.witness.count.to_string(),
            fmt_sig(est.s_hat),
            fmt_sig(dims.box_dim),
            fmt_sig(dims.assouad),
        ])?;
    }
    t.finish(out)
}

fn gw_tail(a: &GwTailArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let (dist, _) = a.offspring.build()?;
    let mut t = Table::new(&["k", "epsilon", "threshold", "trials", "p_hat", "bound_shape"])?;
    for &k in &a.k {
        let e = chernoff_tail_empirical(&dist, k, a.epsilon, a.trials, seed)?;
        t.row(&[k.to_string(), fmt_sig(a.epsilon), fmt_sig(e.threshold), e.trials.to_string(), fmt_sig(e.p_hat), fmt_sig(e.bound_shape)])?;
    }
    t.finish(out)
}

fn ss_family(a: &SsFamilyArgs) -> Result<IfsFamily> {
    let path = Path::new(&a.family);
    if path.is_file() {
        return IfsFamily::from_json(&fs::read_to_string(path)?);
    }
    let parse = |item: &str| -> Result<(u32, f64, f64)> {
        let parts: Vec<&str> = item.trim().split(':').collect();
        let bad = || Error::Parse(format!("expected N:c:p, got '{item}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok((
            parts[0].parse().map_err(|_| bad())?,
            parts[1].parse().map_err(|_| bad())?,
            parts[2].parse().map_err(|_| bad())?,
        ))
    };
    let triples = a.family.split(',').map(parse).collect::<Result<Vec<_>>>()?;
    IfsFamily::from_triples(&triples, a.allow_degenerate)
}

fn ss_dims(a: &SsFamilyArgs, out: Option<&Path>) -> Result<()> {
    let fam = ss_family(a)?;
    let mut t = Table::new(&["family_hash", "box_dim", "box_dim_bisection", "assouad_dim", "c_inf", "c_sup", "gamma"])?;
    t.row(&[
        content_hash(fam.entries()),
        fmt_sig(fam.box_dim()),
        fmt_sig(fam.box_dim_bisection()),
        fmt_sig(fam.assouad_dim()),
        fmt_sig(fam.c_inf()),
        fmt_sig(fam.c_sup()),
        fmt_sig(fam.gamma()),
    ])?;
    t.finish(out)
}

fn ss_sample(a: &SsSampleArgs, seed: u64, out: Option<&Path>, runs: bool) -> Result<()> {
    let fam = ss_family(&a.family)?;
    let hash = content_hash(fam.entries());
    let mut t = Table::new(&["family_hash", "seed", "L", "phi", "k", "l", "s_hat", "runs_found"])?;
    for trial in 0..a.trials {
        let s = derive_seed(seed, trial, "selfsimilar");
        let coding = fam.sample_coding(a.length, s)?;
        let mut fields = vec![hash.clone(), s.to_string(), a.length.to_string(), a.phi.to_string()];
        if runs {
            let found = coding.detect_runs(&a.phi, a.eps);
            fields.extend([opt(found.first().map(|r| r.n)), opt(found.first().map(|r| r.n + r.run_length)), String::new(), found.len().to_string()]);
        } else {
            let est = coding.phi_assouad_estimate(&a.phi, a.k_min..=a.k_max.unwrap_or(a.length))?;
            fields.extend([est.witness.k.to_string(), est.witness.l.to_string(), fmt_sig(est.s_hat), String::new()]);
        }
        t.row(&fields)?;
    }
    t.finish(out)
}

fn carpet_family(a: &CarpetFamilyArgs) -> Result<CarpetFamily> {
    let (f1, f2) = example_templates();
    match a.family.as_str() {
        "f1" => return Ok(CarpetFamily::single(f1)),
        "f2" => return Ok(CarpetFamily::single(f2)),
        "f1+f2" => {
            return CarpetFamily::new(vec![
                CarpetEntry { template: f1, weight: 0.5 },
                CarpetEntry { template: f2, weight: 0.5 },
            ])
        }
        _ => {}
    }
    let text = a.family.trim_start();
    if text.starts_with('{') || text.starts_with('[') {
        return CarpetFamily::from_json(text);
    }
    CarpetFamily::from_json(&fs::read_to_string(&a.family)?)
}

fn carpet_dims(a: &CarpetDimsArgs, out: Option<&Path>) -> Result<()> {
    let fam = carpet_family(&a.family)?;
    let hash = content_hash(fam.entries());
    let mut t = Table::new(&["family_hash", "seed", "L", "phi", "theta", "value", "s_hat", "events"])?;
    let mut row = |label: &str, value: f64| {
        t.row(&[hash.clone(), String::new(), String::new(), String::new(), label.to_string(), fmt_sig(value), String::new(), String::new()])
    };
    row("box", fam.box_dim())?;
    row("quasi_assouad", fam.quasi_assouad())?;
    row("assouad", fam.assouad_dim())?;
    row("branch_point", fam.spectrum_branch_point())?;
    for &theta in &a.theta {
        row(&fmt_sig(theta), fam.assouad_spectrum(theta)?)?;
    }
    t.finish(out)
}

fn carpet_sample(a: &CarpetSampleArgs, seed: u64, out: Option<&Path>, runs: bool) -> Result<()> {
    let fam = carpet_family(&a.family)?;
    let hash = content_hash(fam.entries());
    let policy = if a.ignore_band { BandPolicy::Ignore } else { BandPolicy::Enforce };
    let mut t = Table::new(&["family_hash", "seed", "L", "phi", "theta", "value", "s_hat", "events"])?;
    for trial in 0..a.trials {
        let s = derive_seed(seed, trial, "carpet");
        let coding = fam.sample_coding(a.length, s)?;
        let mut fields = vec![hash.clone(), s.to_string(), a.length.to_string(), a.phi.to_string(), String::new()];
        if runs {
            let events = coding.detect_two_block_runs(&a.phi);
            fields.extend([String::new(), String::new(), events.len().to_string()]);
        } else {
            let est = coding.phi_assouad_estimate(&a.phi, a.k_min..=a.k_max.unwrap_or(a.length), policy)?;
            fields.extend([fmt_sig(est.window.log_ratio), fmt_sig(est.s_hat), String::new()]);
        }
        t.row(&fields)?;
    }
    t.finish(out)
}

fn ldp_rate(a: &LdpArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let rv = BoundedDiscreteRV::parse_atoms(&a.atoms)?;
    if a.n < 1 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let mut t = Table::new(&["a", "I", "upper_bound", "p_hat"])?;
    for &x in &a.a {
        let rate = rv.rate(x);
        let upper = if x > rv.mean() { (-(a.n as f64) * rate).exp() } else { 1.0 };
        let p_hat = if a.trials > 0 { Some(fmt_sig(rv.empirical_tail(x, a.n, a.trials, seed)?.p_hat)) } else { None };
        t.row(&[fmt_sig(x), fmt_sig(rate), fmt_sig(upper), opt(p_hat)])?;
    }
    t.finish(out)
}

fn sweep(cli: &Cli, name: Option<&str>, out: Option<&Path>) -> Result<()> {
    let mut config = match (name, &cli.config) {
        (Some(n), None) => packaged(n)?,
        (None, Some(path)) => ExperimentConfig::from_path(path).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
            other => other,
        })?,
        (Some(_), Some(_)) => return Err(Error::Config("give either --config or --packaged, not both".into())),
        (None, None) => return Err(Error::Config("sweep needs --config or --packaged".into())),
    };
    if let Some(s) = cli.seed {
        config.master_seed = s;
    }
    let target = out.map(Path::to_path_buf).or_else(|| config.output.take());
    let result = run_sweep(&config, cli.threads)?;
    for agg in &result.aggregates {
        eprintln!(
            "phi={} ok={} flagged={} mean={} max={} median={} runs={}",
            agg.phi,
            agg.ok_trials,
            agg.flagged_trials,
            opt(agg.mean.map(fmt_sig)),
            opt(agg.max.map(fmt_sig)),
            opt(agg.median.map(fmt_sig)),
            agg.total_runs
        );
    }
    write_out(target.as_deref(), &csv_bytes(&result)?)
}
