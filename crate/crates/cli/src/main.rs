//! `monotest`: k-sample tests for equality of decreasing functions, and the
//! simulation protocols for the truncated exponential test-bed.

mod input;

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use monotest::limit_theory::{estimate_constants, LimitConfig};
use monotest::models::pooled_time_quantile;
use monotest::rng::derive_seed;
use monotest::sim::{
    run_level, run_power, true_power_benchmark, MixtureNormalization, SimConfig, TruncExp,
};
use monotest::smoothing::{Correction, SourceKind};
use monotest::test_engine::{
    test_density, test_hazard, test_regression, Bandwidth, BootstrapConfig, Scheme, StatisticKind,
    TestOutcome,
};
use monotest::{GroupWeights, Interval};

const SCHEMA_HEADER: &str = "# monotest v1";

/// Bad user input: exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(name = "monotest", version, about = "k-sample tests for monotone functions")]
struct Cli {
    /// Worker threads; overrides MONOTEST_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a k-sample test on CSV input.
    Test(TestArgs),
    /// Simulated level under equal truncated exponential rates.
    SimulateLevel(LevelArgs),
    /// Simulated power along a sweep of the last group's rate.
    SimulatePower(PowerArgs),
    /// Benchmark power with critical values from the least favorable null.
    TruePower(TruePowerArgs),
    /// Monte Carlo limit constants for the truncated exponential null.
    LimitConstants(ConstantsArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Model {
    Density,
    Regression,
    Hazard,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum StatChoice {
    S1,
    S2,
    Both,
}

impl StatChoice {
    fn kinds(self) -> Vec<StatisticKind> {
        match self {
            StatChoice::S1 => vec![StatisticKind::S1],
            StatChoice::S2 => vec![StatisticKind::S2],
            StatChoice::Both => vec![StatisticKind::S1, StatisticKind::S2],
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum CorrectionArg {
    LocalLinear,
    BoundaryKernel,
}

impl From<CorrectionArg> for Correction {
    fn from(c: CorrectionArg) -> Self {
        match c {
            CorrectionArg::LocalLinear => Correction::LocalLinear,
            CorrectionArg::BoundaryKernel => Correction::BoundaryKernel,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SourceArg {
    Grenander,
    Empirical,
}

impl From<SourceArg> for SourceKind {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Grenander => SourceKind::Grenander,
            SourceArg::Empirical => SourceKind::Empirical,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    Decreasing,
    Increasing,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum NormalizationArg {
    Truncated,
    Literal,
}

impl From<NormalizationArg> for MixtureNormalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::Truncated => MixtureNormalization::Truncated,
            NormalizationArg::Literal => MixtureNormalization::Literal,
        }
    }
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    Scheme::parse(s).ok_or_else(|| {
        let names: Vec<_> = Scheme::ALL.iter().map(|s| s.name()).collect();
        format!("unknown scheme `{s}`; expected one of {}", names.join(", "))
    })
}

fn parse_bandwidth(s: &str) -> std::result::Result<Bandwidth, String> {
    if s == "auto" {
        return Ok(Bandwidth::Auto);
    }
    match s.parse::<f64>() {
        Ok(h) if h > 0.0 && h.is_finite() => Ok(Bandwidth::Fixed(h)),
        _ => Err(format!("bandwidth must be `auto` or a positive number, got `{s}`")),
    }
}

fn parse_domain(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || format!("domain must be `a,b` with a < b, got `{s}`");
    if parts.len() != 2 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    Ok((a, b))
}

fn parse_probability(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(p) if p > 0.0 && p < 1.0 => Ok(p),
        _ => Err(format!("expected a number in (0, 1), got `{s}`")),
    }
}

fn parse_rate(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(l) if l >= 0.0 && l.is_finite() => Ok(l),
        _ => Err(format!("rates must be finite and nonnegative, got `{s}`")),
    }
}

#[derive(Args, Debug)]
struct Smoothing {
    /// `auto` or a fixed bandwidth.
    #[arg(long, default_value = "auto", value_parser = parse_bandwidth)]
    bandwidth: Bandwidth,

    #[arg(long, value_enum, default_value = "boundary-kernel")]
    correction: CorrectionArg,

    /// Measure smoothed by the kernel.
    #[arg(long, value_enum, default_value = "grenander")]
    source: SourceArg,
}

#[derive(Args, Debug)]
struct TestArgs {
    /// Input CSV files: `group,x` (density), `group,i,y` (regression) or
    /// `group,x,delta` (hazard).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    #[arg(long, value_enum)]
    model: Model,

    #[arg(long, value_enum, default_value = "both")]
    stat: StatChoice,

    #[arg(long, default_value_t = 0.05, value_parser = parse_probability)]
    alpha: f64,

    /// Bootstrap replications.
    #[arg(long = "B", default_value_t = 500)]
    bootstrap: usize,

    /// Bootstrap scheme; defaults to the first scheme of the model.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,

    #[command(flatten)]
    smoothing: Smoothing,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Domain `a,b` of the functions.
    #[arg(long, value_parser = parse_domain, allow_hyphen_values = true)]
    domain: Option<(f64, f64)>,

    #[arg(long, value_enum, default_value = "decreasing")]
    direction: Direction,

    /// Output file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Observations per group.
    #[arg(long, default_value_t = 100)]
    n: usize,

    /// Repetitions.
    #[arg(long = "R", default_value_t = 500)]
    repetitions: usize,

    /// Bootstrap replications per repetition.
    #[arg(long = "B", default_value_t = 500)]
    bootstrap: usize,

    #[arg(long, default_value_t = 0.05, value_parser = parse_probability)]
    alpha: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Comma-separated density schemes.
    #[arg(long, value_parser = parse_scheme, value_delimiter = ',', default_value = "density_smooth")]
    scheme: Vec<Scheme>,

    #[command(flatten)]
    smoothing: Smoothing,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LevelArgs {
    /// Common rate of all groups.
    #[arg(long, default_value_t = 1.0, value_parser = parse_rate)]
    lambda: f64,

    #[arg(long, default_value_t = 3)]
    groups: usize,

    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Args, Debug)]
struct Sweep {
    /// Rates of all groups but the last.
    #[arg(long, value_delimiter = ',', default_value = "1,1", value_parser = parse_rate)]
    base: Vec<f64>,

    /// Explicit rates for the last group; overrides --from/--to/--by.
    #[arg(long, value_delimiter = ',', value_parser = parse_rate)]
    sweep: Vec<f64>,

    #[arg(long, default_value_t = 0.0)]
    from: f64,

    #[arg(long, default_value_t = 3.5)]
    to: f64,

    #[arg(long, default_value_t = 0.1)]
    by: f64,
}

impl Sweep {
    fn points(&self) -> Result<Vec<f64>> {
        if !self.sweep.is_empty() {
            return Ok(self.sweep.clone());
        }
        if !(self.by > 0.0) || !(self.from >= 0.0) || self.to < self.from {
            return Err(input_err("sweep needs 0 <= from <= to and by > 0"));
        }
        let steps = ((self.to - self.from) / self.by + 1e-9).floor() as usize;
        // Rounded to the step's decimals so printed rates are clean.
        Ok((0..=steps)
            .map(|k| ((self.from + k as f64 * self.by) * 1e9).round() / 1e9)
            .collect())
    }
}

#[derive(Args, Debug)]
struct PowerArgs {
    #[command(flatten)]
    sweep: Sweep,

    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Args, Debug)]
struct TruePowerArgs {
    #[command(flatten)]
    sweep: Sweep,

    #[arg(long, default_value_t = 100)]
    n: usize,

    /// Samples per phase.
    #[arg(long = "R", default_value_t = 10_000)]
    repetitions: usize,

    #[arg(long, default_value_t = 0.05, value_parser = parse_probability)]
    alpha: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Component normalization of the least favorable mixture.
    #[arg(long, value_enum, default_value = "truncated")]
    normalization: NormalizationArg,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    /// Common rate of the null density.
    #[arg(long, default_value_t = 1.0, value_parser = parse_rate)]
    lambda: f64,

    /// Group proportions; normalized to sum to one.
    #[arg(long, value_delimiter = ',', default_value = "1,1,1")]
    weights: Vec<f64>,

    /// Monte Carlo repetitions.
    #[arg(long, default_value_t = 2000)]
    reps: usize,

    #[arg(long, default_value_t = 16)]
    quad_points: usize,

    #[arg(long, default_value_t = 5.0)]
    half_width: f64,

    #[arg(long, default_value_t = 0.005)]
    step: f64,

    #[arg(long, default_value_t = 4.0)]
    zeta_cutoff: f64,

    #[arg(long, default_value_t = 80)]
    t_points: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    out: Option<PathBuf>,
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes the schema header, `# key=value` metadata lines, then the table.
fn emit(out: &Option<PathBuf>, meta: &[(&str, String)], header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = open_output(out)?;
    writeln!(w, "{SCHEMA_HEADER}")?;
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for row in rows {
        csv.write_record(row)?;
    }
    csv.flush()?;
    Ok(())
}

fn bandwidth_name(b: Bandwidth) -> String {
    match b {
        Bandwidth::Auto => "auto".into(),
        Bandwidth::Fixed(h) => h.to_string(),
    }
}

fn default_scheme(model: Model) -> Scheme {
    match model {
        Model::Density => Scheme::DensitySmooth,
        Model::Regression => Scheme::RegressionResidual,
        Model::Hazard => Scheme::HazardGroupwise,
    }
}

fn interval(a: f64, b: f64) -> Result<Interval> {
    Interval::new(a, b).map_err(|e| input_err(e.to_string()))
}

fn run_test(args: &TestArgs) -> Result<()> {
    let scheme = args.scheme.unwrap_or_else(|| default_scheme(args.model));
    if args.bootstrap == 0 {
        return Err(input_err("--B must be at least 1"));
    }
    let cfg = BootstrapConfig {
        scheme,
        replications: args.bootstrap,
        alpha: args.alpha,
        seed: args.seed,
        bandwidth: args.smoothing.bandwidth,
        correction: args.smoothing.correction.into(),
        source: args.smoothing.source.into(),
    };
    let increasing = args.direction == Direction::Increasing;
    let (outcome, domain, sizes) = match args.model {
        Model::Density => {
            let mut samples = input::read_density(&args.inputs)?;
            let (a, b) = match args.domain {
                Some(d) => d,
                None => {
                    let all = samples.iter().flat_map(|s| s.observations.iter().copied());
                    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                        (lo.min(x), hi.max(x))
                    });
                    (lo.min(0.0), hi)
                }
            };
            let domain = interval(a, b)?;
            if let Some(x) = samples
                .iter()
                .flat_map(|s| s.observations.iter())
                .find(|&&x| x < a || x > b)
            {
                return Err(input_err(format!("observation {x} lies outside [{a}, {b}]")));
            }
            if increasing {
                for s in &mut samples {
                    for x in &mut s.observations {
                        *x = a + b - *x;
                    }
                }
            }
            let sizes: Vec<usize> = samples.iter().map(|s| s.len()).collect();
            (test_density(&samples, domain, &cfg)?, domain, sizes)
        }
        Model::Regression => {
            let mut samples = input::read_regression(&args.inputs)?;
            let (a, b) = args.domain.unwrap_or((0.0, 1.0));
            let domain = interval(a, b)?;
            if increasing {
                for s in &mut samples {
                    for y in &mut s.responses {
                        *y = -*y;
                    }
                }
            }
            let sizes: Vec<usize> = samples.iter().map(|s| s.len()).collect();
            (test_regression(&samples, domain, &cfg)?, domain, sizes)
        }
        Model::Hazard => {
            if increasing {
                return Err(input_err(
                    "increasing hazards are not supported: the hazard model has no reflection",
                ));
            }
            let samples = input::read_censored(&args.inputs)?;
            let upper = match args.domain {
                Some((a, b)) if a != 0.0 => {
                    return Err(input_err(format!("hazard domain must start at 0, got {a},{b}")))
                }
                Some((_, b)) => b,
                None => pooled_time_quantile(&samples, 0.9)?,
            };
            let sizes: Vec<usize> = samples.iter().map(|s| s.len()).collect();
            (test_hazard(&samples, upper, &cfg)?, interval(0.0, upper)?, sizes)
        }
    };
    write_test_report(args, &outcome, domain, &sizes)
}

fn write_test_report(
    args: &TestArgs,
    outcome: &TestOutcome,
    domain: Interval,
    sizes: &[usize],
) -> Result<()> {
    let wanted = args.stat.kinds();
    let mut rows = Vec::new();
    for report in outcome.reports.iter().filter(|r| wanted.contains(&r.statistic_kind)) {
        let (h, selected) = match &report.reference {
            Some(r) => (r.bandwidth.to_string(), r.bandwidth_selected.to_string()),
            None => (String::new(), String::new()),
        };
        let note = if report.supported_by_theory {
            ""
        } else {
            "unsupported by theory"
        };
        rows.push(vec![
            report.statistic_kind.name().to_string(),
            report.observed.to_string(),
            report.critical_value.to_string(),
            report.p_value.to_string(),
            report.reject.to_string(),
            h,
            selected,
            report.supported_by_theory.to_string(),
            note.to_string(),
        ]);
    }
    let model = match args.model {
        Model::Density => "density",
        Model::Regression => "regression",
        Model::Hazard => "hazard",
    };
    let direction = match args.direction {
        Direction::Decreasing => "decreasing",
        Direction::Increasing => "increasing",
    };
    let meta = [
        ("model", model.to_string()),
        ("scheme", outcome.scheme.name().to_string()),
        ("domain", format!("{},{}", domain.a(), domain.b())),
        ("direction", direction.to_string()),
        ("group_sizes", join(sizes)),
        ("alpha", args.alpha.to_string()),
        ("B", args.bootstrap.to_string()),
        ("seed", args.seed.to_string()),
        ("bandwidth", bandwidth_name(args.smoothing.bandwidth)),
        ("correction", Correction::from(args.smoothing.correction).name().to_string()),
        ("source", SourceKind::from(args.smoothing.source).name().to_string()),
    ];
    emit(
        &args.out,
        &meta,
        &[
            "stat",
            "observed",
            "critical_value",
            "p_value",
            "reject",
            "bandwidth",
            "bandwidth_selected",
            "supported_by_theory",
            "note",
        ],
        &rows,
    )
}

fn sim_config(lambdas: Vec<f64>, sim: &SimArgs) -> Result<SimConfig> {
    if sim.n == 0 || sim.repetitions == 0 || sim.bootstrap == 0 {
        return Err(input_err("--n, --R and --B must be at least 1"));
    }
    let sizes = vec![sim.n; lambdas.len()];
    let mut cfg = SimConfig::new(lambdas, sizes);
    cfg.repetitions = sim.repetitions;
    cfg.bootstrap = sim.bootstrap;
    cfg.alpha = sim.alpha;
    cfg.seed = sim.seed;
    cfg.schemes = sim.scheme.clone();
    cfg.bandwidth = sim.smoothing.bandwidth;
    cfg.correction = sim.smoothing.correction.into();
    cfg.source = sim.smoothing.source.into();
    Ok(cfg)
}

fn sim_meta(cfg: &SimConfig) -> Vec<(&'static str, String)> {
    vec![
        ("protocol", "truncated exponential on [0,3]".to_string()),
        ("group_sizes", join(&cfg.sizes)),
        ("alpha", cfg.alpha.to_string()),
        ("B", cfg.bootstrap.to_string()),
        ("seed", cfg.seed.to_string()),
        ("bandwidth", bandwidth_name(cfg.bandwidth)),
        ("correction", cfg.correction.name().to_string()),
        ("source", cfg.source.name().to_string()),
    ]
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn run_simulate_level(args: &LevelArgs) -> Result<()> {
    if args.groups < 2 {
        return Err(input_err("--groups must be at least 2"));
    }
    let cfg = sim_config(vec![args.lambda; args.groups], &args.sim)?;
    let rows = run_level(&cfg)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.lambda.to_string(),
                r.n.to_string(),
                r.scheme.name().to_string(),
                r.stat.name().to_string(),
                r.rejections.to_string(),
                r.repetitions.to_string(),
                r.level.to_string(),
                r.stderr.to_string(),
            ]
        })
        .collect();
    emit(
        &args.sim.out,
        &sim_meta(&cfg),
        &["lambda", "n", "scheme", "stat", "rejections", "R", "level", "stderr"],
        &table,
    )
}

fn power_table(points: &[monotest::sim::PowerPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            vec![
                p.lambda3.to_string(),
                p.stat.name().to_string(),
                p.scheme.clone(),
                p.power.to_string(),
                p.stderr.to_string(),
            ]
        })
        .collect()
}

const POWER_HEADER: [&str; 5] = ["lambda3", "stat", "scheme", "power", "stderr"];

fn run_simulate_power(args: &PowerArgs) -> Result<()> {
    let sweep = args.sweep.points()?;
    let mut lambdas = args.sweep.base.clone();
    lambdas.push(sweep[0]);
    let cfg = sim_config(lambdas, &args.sim)?;
    let points = run_power(&cfg, &sweep)?;
    let mut meta = sim_meta(&cfg);
    meta.push(("base_rates", join(&args.sweep.base)));
    meta.push(("R", cfg.repetitions.to_string()));
    emit(&args.sim.out, &meta, &POWER_HEADER, &power_table(&points))
}

fn run_true_power(args: &TruePowerArgs) -> Result<()> {
    let sweep = args.sweep.points()?;
    if args.n == 0 {
        return Err(input_err("--n must be at least 1"));
    }
    if args.repetitions < 100 {
        return Err(input_err("--R must be at least 100 for the benchmark"));
    }
    let groups = args.sweep.base.len() + 1;
    let sizes = vec![args.n; groups];
    let normalization: MixtureNormalization = args.normalization.into();
    let mut points = Vec::new();
    for (i, &l3) in sweep.iter().enumerate() {
        let mut lambdas = args.sweep.base.clone();
        lambdas.push(l3);
        let seed = derive_seed(args.seed, 0x5eeb, i as u64);
        points.extend(true_power_benchmark(
            &lambdas,
            &sizes,
            args.repetitions,
            args.alpha,
            seed,
            normalization,
        )?);
    }
    let meta = [
        ("protocol", "true power, least favorable null mixture".to_string()),
        ("normalization", normalization.name().to_string()),
        ("base_rates", join(&args.sweep.base)),
        ("group_sizes", join(&sizes)),
        ("R", args.repetitions.to_string()),
        ("alpha", args.alpha.to_string()),
        ("seed", args.seed.to_string()),
    ];
    emit(&args.out, &meta, &POWER_HEADER, &power_table(&points))
}

fn run_limit_constants(args: &ConstantsArgs) -> Result<()> {
    if args.weights.len() < 2 || args.weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(input_err("--weights needs at least two positive entries"));
    }
    let total: f64 = args.weights.iter().sum();
    let weights = GroupWeights::new(args.weights.iter().map(|w| w / total).collect())
        .map_err(|e| input_err(e.to_string()))?;
    let cfg = LimitConfig {
        reps: args.reps,
        quad_points: args.quad_points,
        half_width: args.half_width,
        step: args.step,
        zeta_cutoff: args.zeta_cutoff,
        t_points: args.t_points,
        seed: args.seed,
    };
    let mf = TruncExp::new(args.lambda)?.model_functions(weights.clone());
    let c = estimate_constants(&mf, None, &cfg)?;
    let row = vec![
        c.m1.value.to_string(),
        c.sigma1_sq.value.to_string(),
        c.m2.value.to_string(),
        c.sigma2_sq.value.to_string(),
        c.m1.stderr.to_string(),
        c.sigma1_sq.stderr.to_string(),
        c.m2.stderr.to_string(),
        c.sigma2_sq.stderr.to_string(),
        c.proportional.to_string(),
        cfg.reps.to_string(),
        cfg.quad_points.to_string(),
        cfg.half_width.to_string(),
        cfg.step.to_string(),
        cfg.zeta_cutoff.to_string(),
        cfg.t_points.to_string(),
    ];
    let meta = [
        ("model", "density".to_string()),
        ("lambda", args.lambda.to_string()),
        ("weights", join(weights.as_slice())),
        ("seed", args.seed.to_string()),
    ];
    emit(
        &args.out,
        &meta,
        &[
            "m1",
            "sigma1_sq",
            "m2",
            "sigma2_sq",
            "m1_stderr",
            "sigma1_sq_stderr",
            "m2_stderr",
            "sigma2_sq_stderr",
            "proportional",
            "reps",
            "quad_points",
            "half_width",
            "step",
            "zeta_cutoff",
            "t_points",
        ],
        &[row],
    )
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("MONOTEST_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| input_err(format!("MONOTEST_THREADS must be a count, got `{v}`")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(input_err("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot start the worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Test(a) => run_test(a),
        Command::SimulateLevel(a) => run_simulate_level(a),
        Command::SimulatePower(a) => run_simulate_power(a),
        Command::TruePower(a) => run_true_power(a),
        Command::LimitConstants(a) => run_limit_constants(a),
    }
}

/// Library errors that describe the caller's input rather than a failure.
fn is_input_error(e: &anyhow::Error) -> bool {
    if e.downcast_ref::<InputError>().is_some() {
        return true;
    }
    matches!(
        e.downcast_ref::<monotest::Error>(),
        Some(
            monotest::Error::InvalidInterval { .. }
                | monotest::Error::InvalidParameter(_)
                | monotest::Error::EmptySample
                | monotest::Error::NoEvents
                | monotest::Error::DomainMismatch(_)
        )
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_input_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
