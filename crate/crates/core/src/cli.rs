//! Command-line front end. Every command validates its full configuration
//! before computing anything and writes a CSV or JSON table.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::devicesim::DeviceSource;
use crate::dpso::{
    build_strategy_operator, dpso_estimator_range, dpso_trials, optimize_plan, OptimizeMethod, SamplingPlan,
    TrialRecord,
};
use crate::error::{invalid, Error, Result};
use crate::hypotest::{default_threshold, simple_sample_complexity, theorem1_plan, Decision, TestConfig, VerdictReport};
use crate::linalg::DensityOperator;
use crate::plm::{build_strategy, plm_run, plm_sample_complexity, StrategyOperator, GAP_EPS};
use crate::rng::{derive_seed, stream_rng};
use crate::sop::{build_l, sop_estimator_range, sop_trials};
use crate::stabilizer::{generator_tests, ghz_gap_table, uniform_gap, StabilizerTarget, UniformScheme};
use crate::target::{ghz, haar_random, zero_state, DenseTarget, MpsTarget, TargetModel};

pub const SCHEMA_VERSION: u32 = 1;
pub const EXIT_ACCEPT: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

const SEED_TAG_TARGET: u64 = 1;
const SEED_TAG_PLAN: u64 = 2;
const SEED_TAG_TRIALS: u64 = 3;

#[derive(Debug, Parser)]
#[command(name = "qsv", version, about = "Quantum state verification experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral gap of one protocol on one target (averaged over samples for Haar targets).
    Gap(RunArgs),
    /// Run a protocol against a simulated device and report the verdict.
    Verify(RunArgs),
    /// Mean gap for every n up to --n and every level up to --level.
    Sweep(RunArgs),
    /// Histogram of gaps over Haar samples.
    Hist(RunArgs),
    /// Sample complexities of all protocols side by side.
    Complexity(RunArgs),
    /// GHZ gap table from symbolic gamma tables, n = 3..=--n.
    GhzCheck(RunArgs),
}

/// Flags shared by every command; each overrides the matching key of `--config`.
#[derive(Debug, Default, Clone, Args)]
pub struct RunArgs {
    /// JSON file with any of the keys below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// ghz | haar | zero | dense:PATH | stabilizer:PATH | mps:PATH
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// plm | sop | dpso
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub level: Option<usize>,
    /// naive | classes | random | optimized | lp | file:PATH
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub chi: Option<f64>,
    /// Trial count or "auto".
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    /// Number of Haar targets for gap statistics.
    #[arg(long)]
    pub samples: Option<usize>,
    /// exact | worst-case:EPS | depolarized:P | PATH
    #[arg(long)]
    pub device: Option<String>,
    /// Per-trial CSV log for verify.
    #[arg(long)]
    pub trial_log: Option<PathBuf>,
    /// Use the symmetric estimator range in Hoeffding bounds.
    #[arg(long)]
    pub conservative: bool,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Gap to use in the complexity table instead of computing it.
    #[arg(long)]
    pub nu: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
enum TrialsValue {
    Count(u64),
    Word(String),
    #[default]
    Missing,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    target: Option<String>,
    n: Option<usize>,
    protocol: Option<String>,
    level: Option<usize>,
    scheme: Option<String>,
    epsilon: Option<f64>,
    delta: Option<f64>,
    chi: Option<f64>,
    trials: TrialsValue,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<String>,
    samples: Option<usize>,
    device: Option<String>,
    trial_log: Option<PathBuf>,
    conservative: Option<bool>,
    bins: Option<usize>,
    nu: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Plm,
    Sop,
    Dpso,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Plm => "plm",
            Protocol::Sop => "sop",
            Protocol::Dpso => "dpso",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plm" => Ok(Protocol::Plm),
            "sop" => Ok(Protocol::Sop),
            "dpso" => Ok(Protocol::Dpso),
            other => Err(Error::Parse(format!("unknown protocol {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSpec {
    Ghz,
    Haar,
    Zero,
    Dense(PathBuf),
    Stabilizer(PathBuf),
    Mps(PathBuf),
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Ghz => f.write_str("ghz"),
            TargetSpec::Haar => f.write_str("haar"),
            TargetSpec::Zero => f.write_str("zero"),
            TargetSpec::Dense(p) => write!(f, "dense:{}", p.display()),
            TargetSpec::Stabilizer(p) => write!(f, "stabilizer:{}", p.display()),
            TargetSpec::Mps(p) => write!(f, "mps:{}", p.display()),
        }
    }
}

impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ghz" => TargetSpec::Ghz,
            "haar" => TargetSpec::Haar,
            "zero" => TargetSpec::Zero,
            _ => match s.split_once(':') {
                Some(("dense", p)) => TargetSpec::Dense(p.into()),
                Some(("stabilizer", p)) => TargetSpec::Stabilizer(p.into()),
                Some(("mps", p)) => TargetSpec::Mps(p.into()),
                _ if s.ends_with(".json") => TargetSpec::Dense(s.into()),
                _ => return Err(Error::Parse(format!("unknown target {s:?}"))),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Uniform(UniformScheme),
    Random,
    Optimized,
    Lp,
    File(PathBuf),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Uniform(u) => write!(f, "{u}"),
            Scheme::Random => f.write_str("random"),
            Scheme::Optimized => f.write_str("optimized"),
            Scheme::Lp => f.write_str("lp"),
            Scheme::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => Scheme::Random,
            "optimized" => Scheme::Optimized,
            "lp" => Scheme::Lp,
            _ => match s.strip_prefix("file:") {
                Some(p) => Scheme::File(p.into()),
                None => Scheme::Uniform(s.parse()?),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeviceSpec {
    Exact,
    WorstCase(f64),
    Depolarized(f64),
    File(PathBuf),
}

impl FromStr for DeviceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |v: &str| -> Result<f64> { v.parse().map_err(|_| Error::Parse(format!("bad number in device {s:?}"))) };
        Ok(match s.split_once(':') {
            None if s == "exact" => DeviceSpec::Exact,
            Some(("worst-case", v)) => DeviceSpec::WorstCase(num(v)?),
            Some(("depolarized", v)) => DeviceSpec::Depolarized(num(v)?),
            Some(("file", p)) => DeviceSpec::File(p.into()),
            _ if s.ends_with(".json") => DeviceSpec::File(s.into()),
            _ => return Err(Error::Parse(format!("unknown device {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    pub n: usize,
    pub protocol: Protocol,
    pub level: usize,
    pub scheme: Scheme,
    pub epsilon: f64,
    pub delta: f64,
    pub chi: Option<f64>,
    /// `None` means "auto".
    pub trials: Option<u64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub samples: usize,
    pub device: DeviceSpec,
    pub trial_log: Option<PathBuf>,
    pub conservative: bool,
    pub bins: usize,
    pub nu: Option<f64>,
}

fn read_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    /// Merges flags over the optional config file and validates everything.
    pub fn resolve(args: &RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => read_config(p)?,
            None => FileConfig::default(),
        };
        let trials_text = match (&args.trials, file.trials) {
            (Some(t), _) => Some(t.clone()),
            (None, TrialsValue::Count(c)) => Some(c.to_string()),
            (None, TrialsValue::Word(w)) => Some(w),
            (None, TrialsValue::Missing) => None,
        };
        let trials = match trials_text.as_deref() {
            None | Some("auto") => None,
            Some(t) => Some(
                t.parse::<u64>()
                    .map_err(|_| Error::Parse(format!("trials must be a count or \"auto\", got {t:?}")))?,
            ),
        };
        if trials == Some(0) {
            return invalid("trials must be positive");
        }
        let format = match args.format.clone().or(file.format).as_deref() {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => return Err(Error::Parse(format!("unknown format {other:?}"))),
        };
        let cfg = Self {
            target: args.target.clone().or(file.target).as_deref().unwrap_or("ghz").parse()?,
            n: args.n.or(file.n).unwrap_or(3),
            protocol: args.protocol.clone().or(file.protocol).as_deref().unwrap_or("dpso").parse()?,
            level: args.level.or(file.level).unwrap_or(1),
            scheme: args.scheme.clone().or(file.scheme).as_deref().unwrap_or("naive").parse()?,
            epsilon: args.epsilon.or(file.epsilon).unwrap_or(0.1),
            delta: args.delta.or(file.delta).unwrap_or(0.1),
            chi: args.chi.or(file.chi),
            trials,
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args.out.clone().or(file.out),
            format,
            samples: args.samples.or(file.samples).unwrap_or(1),
            device: args.device.clone().or(file.device).as_deref().unwrap_or("exact").parse()?,
            trial_log: args.trial_log.clone().or(file.trial_log),
            conservative: args.conservative || file.conservative.unwrap_or(false),
            bins: args.bins.or(file.bins).unwrap_or(20),
            nu: args.nu.or(file.nu),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return invalid(format!("n={} must be at least 2", self.n));
        }
        if self.level == 0 || self.level >= self.n {
            return invalid(format!("level {} must satisfy 1 <= level < n={}", self.level, self.n));
        }
        if self.samples == 0 || self.bins == 0 {
            return invalid("samples and bins must be positive");
        }
        // range and gap are placeholders; only ε, δ, χ are checked here
        let probe = TestConfig::new(self.epsilon, self.delta, 0.0, 1.0, 1.0)?;
        if let Some(chi) = self.chi {
            probe.with_chi(chi)?;
        }
        if let Some(nu) = self.nu {
            if !(nu > 0.0 && nu <= 1.0) {
                return invalid(format!("gap {nu} outside (0, 1]"));
            }
        }
        match self.device {
            DeviceSpec::WorstCase(e) | DeviceSpec::Depolarized(e) if !(0.0..=1.0).contains(&e) => {
                invalid(format!("device parameter {e} outside [0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

/// A loaded target; stabilizer targets keep their group for the symbolic routes.
pub enum LoadedTarget {
    Dense(DenseTarget),
    Stabilizer(StabilizerTarget),
    Mps(MpsTarget),
}

impl LoadedTarget {
    pub fn model(&self) -> &dyn TargetModel {
        match self {
            LoadedTarget::Dense(t) => t,
            LoadedTarget::Stabilizer(t) => t,
            LoadedTarget::Mps(t) => t,
        }
    }
}

/// Builds the target for Haar sample `sample` (other families ignore it).
pub fn load_target(spec: &TargetSpec, n: usize, seed: u64, sample: u64) -> Result<LoadedTarget> {
    let t = match spec {
        TargetSpec::Ghz => LoadedTarget::Stabilizer(ghz(n)?.1),
        TargetSpec::Haar => LoadedTarget::Dense(haar_random(n, derive_seed(derive_seed(seed, SEED_TAG_TARGET), sample))?),
        TargetSpec::Zero => LoadedTarget::Dense(zero_state(n)?),
        TargetSpec::Dense(p) => LoadedTarget::Dense(DenseTarget::load(p)?),
        TargetSpec::Stabilizer(p) => LoadedTarget::Stabilizer(StabilizerTarget::load(p)?),
        TargetSpec::Mps(p) => LoadedTarget::Mps(MpsTarget::load(p)?),
    };
    if t.model().num_qubits() != n {
        return invalid(format!("target has {} qubits but n={n}", t.model().num_qubits()));
    }
    Ok(t)
}

/// Sampling plan for a DPSO scheme at level `r`.
pub fn dpso_plan(target: &dyn TargetModel, r: usize, scheme: &Scheme, seed: u64) -> Result<SamplingPlan> {
    let n = target.num_qubits();
    let plan = match scheme {
        Scheme::Uniform(UniformScheme::Naive) => SamplingPlan::naive_uniform(n, r)?,
        Scheme::Uniform(UniformScheme::GhzClasses) => SamplingPlan::ghz_class_uniform(n, r)?,
        Scheme::Random => SamplingPlan::random_product(n, r, &mut stream_rng(derive_seed(seed, SEED_TAG_PLAN), 0))?,
        Scheme::Optimized => optimize_plan(target, r, OptimizeMethod::ProjectedAscent)?.plan,
        Scheme::Lp => optimize_plan(target, r, OptimizeMethod::StabilizerLp)?.plan,
        Scheme::File(p) => SamplingPlan::from_json(&std::fs::read_to_string(p)?)?,
    };
    if plan.num_qubits() != n || plan.level() != r {
        return invalid("sampling plan does not match n and level");
    }
    Ok(plan)
}

/// Dense strategy operator of a protocol.
pub fn strategy_operator(
    target: &dyn TargetModel,
    protocol: Protocol,
    level: usize,
    scheme: &Scheme,
    seed: u64,
) -> Result<StrategyOperator> {
    match protocol {
        Protocol::Plm => {
            let s = target
                .stabilizer_group()
                .ok_or_else(|| Error::Validation("plm needs a stabilizer target".into()))?;
            build_strategy(&generator_tests(s)?, &target.to_dense()?)
        }
        Protocol::Sop => build_l(target, level),
        Protocol::Dpso => build_strategy_operator(target, &dpso_plan(target, level, scheme, seed)?),
    }
}

/// Spectral gap, through the symbolic route for uniform DPSO schemes on
/// stabilizer targets.
pub fn protocol_gap(target: &dyn TargetModel, protocol: Protocol, level: usize, scheme: &Scheme, seed: u64) -> Result<f64> {
    if let (Protocol::Dpso, Scheme::Uniform(u), Some(s)) = (protocol, scheme, target.stabilizer_group()) {
        return uniform_gap(s, target.num_qubits() - level, *u);
    }
    strategy_operator(target, protocol, level, scheme, seed)?.gap()
}

/// A column-labelled result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Self { command, columns: columns.to_vec(), rows: Vec::new() }
    }

    fn cell(v: &Value) -> String {
        match v {
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            other => other.to_string(),
        }
    }

    pub fn to_csv(&self, seed: u64) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.iter().map(Self::cell).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s.push_str(&format!("# seed={seed}\n# version={}\n", env!("CARGO_PKG_VERSION")));
        s
    }

    pub fn to_json(&self, seed: u64) -> String {
        let v = json!({
            "schema_version": SCHEMA_VERSION,
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": seed,
            "columns": self.columns,
            "rows": self.rows,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("tables serialize");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format, seed: u64) -> String {
        match format {
            Format::Csv => self.to_csv(seed),
            Format::Json => self.to_json(seed),
        }
    }
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn sample_gaps(cfg: &ExperimentConfig, n: usize, level: usize) -> Result<Vec<f64>> {
    let samples = if cfg.target == TargetSpec::Haar { cfg.samples } else { 1 };
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let t = load_target(&cfg.target, n, cfg.seed, i)?;
            protocol_gap(t.model(), cfg.protocol, level, &cfg.scheme, derive_seed(cfg.seed, i))
        })
        .collect()
}

pub fn cmd_gap(cfg: &ExperimentConfig) -> Result<Table> {
    let gaps = sample_gaps(cfg, cfg.n, cfg.level)?;
    let (mean, stderr) = mean_stderr(&gaps);
    let mut t = Table::new("gap", &["target", "n", "protocol", "level", "scheme", "nu", "stderr", "samples"]);
    t.rows.push(vec![
        json!(cfg.target.to_string()),
        json!(cfg.n),
        json!(cfg.protocol.to_string()),
        json!(cfg.level),
        json!(cfg.scheme.to_string()),
        json!(mean),
        json!(stderr),
        json!(gaps.len()),
    ]);
    Ok(t)
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new("sweep", &["target", "n", "protocol", "level", "scheme", "mean_nu", "stderr", "samples"]);
    for n in 2..=cfg.n {
        for level in 1..=cfg.level.min(n - 1) {
            let gaps = sample_gaps(cfg, n, level)?;
            let (mean, stderr) = mean_stderr(&gaps);
            t.rows.push(vec![
                json!(cfg.target.to_string()),
                json!(n),
                json!(cfg.protocol.to_string()),
                json!(level),
                json!(cfg.scheme.to_string()),
                json!(mean),
                json!(stderr),
                json!(gaps.len()),
            ]);
        }
    }
    Ok(t)
}

pub fn cmd_hist(cfg: &ExperimentConfig) -> Result<Table> {
    let gaps = sample_gaps(cfg, cfg.n, cfg.level)?;
    let mut counts = vec![0u64; cfg.bins];
    for g in &gaps {
        let b = ((g * cfg.bins as f64) as usize).min(cfg.bins - 1);
        counts[b] += 1;
    }
    let mut t = Table::new("hist", &["n", "protocol", "level", "bin_lo", "bin_hi", "count"]);
    for (i, c) in counts.iter().enumerate() {
        t.rows.push(vec![
            json!(cfg.n),
            json!(cfg.protocol.to_string()),
            json!(cfg.level),
            json!(i as f64 / cfg.bins as f64),
            json!((i + 1) as f64 / cfg.bins as f64),
            json!(c),
        ]);
    }
    Ok(t)
}

pub fn cmd_complexity(cfg: &ExperimentConfig) -> Result<Table> {
    let loaded = if cfg.nu.is_none() { Some(load_target(&cfg.target, cfg.n, cfg.seed, 0)?) } else { None };
    let gap_of = |p: Protocol, level: usize| -> Result<Option<f64>> {
        match (cfg.nu, &loaded) {
            (Some(nu), _) => Ok(Some(nu)),
            (None, Some(t)) => match protocol_gap(t.model(), p, level, &cfg.scheme, cfg.seed) {
                Ok(g) => Ok(Some(g)),
                Err(Error::Validation(_)) if p == Protocol::Plm => Ok(None),
                Err(e) => Err(e),
            },
            (None, None) => unreachable!("target loaded when no gap is given"),
        }
    };
    let mut t = Table::new(
        "complexity",
        &[
            "level", "epsilon", "delta", "nu_plm", "n_plm", "nu_sop", "n_sop", "nu_dpso", "n_dpso", "sop_dpso_ratio",
            "width_factor",
        ],
    );
    // a computed zero gap leaves that protocol's N empty; a supplied one is an error
    let complexity = |range: (f64, f64), nu: f64| -> Result<Option<u64>> {
        if cfg.nu.is_none() && nu <= GAP_EPS {
            return Ok(None);
        }
        simple_sample_complexity(&TestConfig::new(cfg.epsilon, cfg.delta, range.0, range.1, nu)?).map(Some)
    };
    let nu_plm = gap_of(Protocol::Plm, cfg.level)?;
    let n_plm = match nu_plm {
        Some(nu) if cfg.nu.is_some() || nu > GAP_EPS => Some(plm_sample_complexity(cfg.epsilon, cfg.delta, nu)?),
        _ => None,
    };
    for level in 1..=cfg.level {
        let nu_sop = gap_of(Protocol::Sop, level)?.expect("sop gap always defined");
        let nu_dpso = gap_of(Protocol::Dpso, level)?.expect("dpso gap always defined");
        let n_sop = complexity(sop_estimator_range(level, cfg.conservative), nu_sop)?;
        let n_dpso = complexity(dpso_estimator_range(level, cfg.conservative), nu_dpso)?;
        let ratio = n_sop.zip(n_dpso).map(|(s, d)| s as f64 / d as f64);
        t.rows.push(vec![
            json!(level),
            json!(cfg.epsilon),
            json!(cfg.delta),
            json!(nu_plm),
            json!(n_plm),
            json!(nu_sop),
            json!(n_sop),
            json!(nu_dpso),
            json!(n_dpso),
            json!(ratio),
            json!(1u64 << (2 * level - 2)),
        ]);
    }
    Ok(t)
}

pub fn cmd_ghz_check(cfg: &ExperimentConfig) -> Result<(Table, bool)> {
    let mut t = Table::new(
        "ghz-check",
        &["n", "r", "naive", "naive_expected", "classes", "classes_expected", "match"],
    );
    let mut all = true;
    for n in 3..=cfg.n.max(3) {
        for row in ghz_gap_table(n)? {
            let ok = (row.naive - row.naive_expected).abs() <= 1e-10 && (row.classes - row.classes_expected).abs() <= 1e-10;
            all &= ok;
            t.rows.push(vec![
                json!(row.n),
                json!(row.r),
                json!(row.naive),
                json!(row.naive_expected),
                json!(row.classes),
                json!(row.classes_expected),
                json!(ok),
            ]);
        }
    }
    Ok((t, all))
}

/// Outcome of `verify`: the report table, the decision and the trial log.
pub struct VerifyOutcome {
    pub table: Table,
    pub decision: Decision,
    pub trial_log: Option<String>,
}

fn make_device(cfg: &ExperimentConfig, target: &dyn TargetModel, omega: &StrategyOperator) -> Result<DensityOperator> {
    let psi = target.to_dense()?;
    let source = match &cfg.device {
        DeviceSpec::Exact => DeviceSource::exact(&psi),
        DeviceSpec::WorstCase(e) => DeviceSource::worst_case(&psi, omega, *e)?,
        DeviceSpec::Depolarized(p) => DeviceSource::depolarized(&psi, *p)?,
        DeviceSpec::File(p) => DeviceSource::load(p)?,
    };
    if source.num_qubits() != target.num_qubits() {
        return invalid("device and target sizes differ");
    }
    Ok(source.emit().clone())
}

fn trial_log_csv(records: &[TrialRecord], seed: u64) -> String {
    let mut s = String::from(TrialRecord::CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s.push_str(&format!("# seed={seed}\n# version={}\n", env!("CARGO_PKG_VERSION")));
    s
}

pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<VerifyOutcome> {
    let loaded = load_target(&cfg.target, cfg.n, cfg.seed, 0)?;
    let target = loaded.model();
    let plan = match cfg.protocol {
        Protocol::Dpso => Some(dpso_plan(target, cfg.level, &cfg.scheme, cfg.seed)?),
        _ => None,
    };
    let omega = match &plan {
        Some(p) => build_strategy_operator(target, p)?,
        None => strategy_operator(target, cfg.protocol, cfg.level, &cfg.scheme, cfg.seed)?,
    };
    let nu = omega.gap()?;
    let rho = make_device(cfg, target, &omega)?;
    let trial_seed = derive_seed(cfg.seed, SEED_TAG_TRIALS);
    let mut table = Table::new(
        "verify",
        &[
            "protocol", "n", "level", "nu", "trials", "mean", "threshold", "decision", "type_i_bound", "type_ii_bound",
            "min_estimate", "max_estimate", "negative_estimates",
        ],
    );

    if cfg.protocol == Protocol::Plm {
        let s = target.stabilizer_group().expect("plm strategy built from a stabilizer group");
        let tests = generator_tests(s)?;
        let copies = match cfg.trials {
            Some(t) => t,
            None => plm_sample_complexity(cfg.epsilon, cfg.delta, nu)?,
        };
        let device = vec![rho; copies as usize];
        let verdict = plm_run(&device, &tests, &mut stream_rng(trial_seed, 0))?;
        let decision = if verdict.accepted { Decision::Accept } else { Decision::Reject };
        table.rows.push(vec![
            json!("plm"),
            json!(cfg.n),
            Value::Null,
            json!(nu),
            json!(verdict.copies_used),
            Value::Null,
            Value::Null,
            json!(decision.to_string()),
            Value::Null,
            Value::Null,
            Value::Null,
            Value::Null,
            Value::Null,
        ]);
        return Ok(VerifyOutcome { table, decision, trial_log: None });
    }

    let (a, b) = match cfg.protocol {
        Protocol::Sop => sop_estimator_range(cfg.level, cfg.conservative),
        _ => dpso_estimator_range(cfg.level, cfg.conservative),
    };
    let mut test_cfg = TestConfig::new(cfg.epsilon, cfg.delta, a, b, nu)?;
    if let Some(chi) = cfg.chi {
        test_cfg = test_cfg.with_chi(chi)?;
    }
    let (threshold, trials) = match (cfg.trials, cfg.chi) {
        (Some(n), _) => (default_threshold(&test_cfg), n),
        (None, Some(_)) => theorem1_plan(&test_cfg)?,
        (None, None) => (default_threshold(&test_cfg), simple_sample_complexity(&test_cfg)?),
    };
    let records = match &plan {
        Some(p) => dpso_trials(&rho, target, p, trials, trial_seed)?,
        None => sop_trials(&rho, target, cfg.level, trials, trial_seed)?,
    };
    let estimates: Vec<f64> = records.iter().map(|r| r.omega_hat).collect();
    let report = VerdictReport::with_threshold(&test_cfg, &estimates, threshold)?;
    table.rows.push(vec![
        json!(cfg.protocol.to_string()),
        json!(cfg.n),
        json!(cfg.level),
        json!(nu),
        json!(report.trials),
        json!(report.mean),
        json!(report.threshold),
        json!(report.decision.to_string()),
        json!(report.type_i_bound),
        json!(report.type_ii_bound),
        json!(report.min_estimate),
        json!(report.max_estimate),
        json!(report.negative_estimates),
    ]);
    let trial_log = cfg.trial_log.as_ref().map(|_| trial_log_csv(&records, cfg.seed));
    Ok(VerifyOutcome { table, decision: report.decision, trial_log })
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(Error::from),
    }
}

/// Runs a parsed command and returns its exit code.
pub fn run(command: &Command, stdout: &mut dyn Write) -> Result<i32> {
    let (args, name) = match command {
        Command::Gap(a) => (a, "gap"),
        Command::Verify(a) => (a, "verify"),
        Command::Sweep(a) => (a, "sweep"),
        Command::Hist(a) => (a, "hist"),
        Command::Complexity(a) => (a, "complexity"),
        Command::GhzCheck(a) => (a, "ghz-check"),
    };
    let cfg = ExperimentConfig::resolve(args)?;
    let (table, code) = match name {
        "gap" => (cmd_gap(&cfg)?, EXIT_ACCEPT),
        "sweep" => (cmd_sweep(&cfg)?, EXIT_ACCEPT),
        "hist" => (cmd_hist(&cfg)?, EXIT_ACCEPT),
        "complexity" => (cmd_complexity(&cfg)?, EXIT_ACCEPT),
        "ghz-check" => {
            let (t, ok) = cmd_ghz_check(&cfg)?;
            (t, if ok { EXIT_ACCEPT } else { EXIT_REJECT })
        }
        _ => {
            let v = cmd_verify(&cfg)?;
            if let (Some(path), Some(log)) = (&cfg.trial_log, &v.trial_log) {
                write_output(Some(path), log, stdout)?;
            }
            let code = if v.decision == Decision::Accept { EXIT_ACCEPT } else { EXIT_REJECT };
            (v.table, code)
        }
    };
    write_output(cfg.out.as_deref(), &table.render(cfg.format, cfg.seed), stdout)?;
    Ok(code)
}

/// Parses `args`, runs the command and maps errors to exit code 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_ACCEPT };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(&cli.command, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
