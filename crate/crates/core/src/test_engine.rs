//! Test statistics, bootstrap calibration and decisions.
//!
//! `S1 = Σ_{i<j} ∫|f̂_i − f̂_j|` and `S2 = Σ_j ∫|f̂_j − f̂_0|` compare the
//! group estimates with each other and with the estimate from the pooled
//! process. Critical values come from a model-specific bootstrap that draws
//! new samples from a smooth estimate of the common function (or, as an
//! unsupported variant for densities, from the pooled step estimate).

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{
    empirical_cdf, kaplan_meier, nelson_aalen, pool, regression_cumsum, CensoredSample,
    DensitySample, GroupWeights, KaplanMeier, RegressionSample,
};
use crate::quadrature::GL8;
use crate::rng::substream;
use crate::smoothing::{
    default_bandwidth_grid, make_density, make_hazard, select_bandwidth, Correction,
    NormalizedDensity, SmoothEstimate, SmoothSource, SourceKind, DENSITY_GRID_POINTS,
};
use crate::step_core::{grenander, l1_distance, CumulativeProcess, Interval, MonotoneStepEstimate};

/// Acceptance rates below this make rejection sampling impractical.
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-3;

/// Envelope inflation over the grid maximum of the reference density.
pub const ENVELOPE_FACTOR: f64 = 1.01;

/// Cells of the tabulated cumulative hazard.
const HAZARD_CELLS: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct TestStatistics {
    pub s1: f64,
    pub s2: f64,
    /// `(i, j, ∫|f̂_i − f̂_j|)` for `i < j`.
    pub per_pair: Vec<(usize, usize, f64)>,
    /// `∫|f̂_j − f̂_0|` per group.
    pub per_group_vs_pool: Vec<f64>,
}

impl TestStatistics {
    pub fn get(&self, kind: StatisticKind) -> f64 {
        match kind {
            StatisticKind::S1 => self.s1,
            StatisticKind::S2 => self.s2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatisticKind {
    S1,
    S2,
}

impl StatisticKind {
    pub fn name(&self) -> &'static str {
        match self {
            StatisticKind::S1 => "S1",
            StatisticKind::S2 => "S2",
        }
    }
}

pub fn compute_statistics(
    estimates: &[MonotoneStepEstimate],
    pooled: &MonotoneStepEstimate,
    on: &Interval,
) -> Result<TestStatistics> {
    if estimates.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two groups, got {}",
            estimates.len()
        )));
    }
    let mut per_pair = Vec::with_capacity(estimates.len() * (estimates.len() - 1) / 2);
    for i in 0..estimates.len() {
        for j in i + 1..estimates.len() {
            per_pair.push((i, j, l1_distance(&estimates[i], &estimates[j], on)?));
        }
    }
    let per_group_vs_pool = estimates
        .iter()
        .map(|f| l1_distance(f, pooled, on))
        .collect::<Result<Vec<_>>>()?;
    Ok(TestStatistics {
        s1: per_pair.iter().map(|p| p.2).sum(),
        s2: per_group_vs_pool.iter().sum(),
        per_pair,
        per_group_vs_pool,
    })
}

/// Group processes, their pooled version and the resulting statistics.
#[derive(Debug, Clone)]
pub struct Fit {
    pub domain: Interval,
    pub sizes: Vec<usize>,
    pub weights: GroupWeights,
    pub processes: Vec<CumulativeProcess>,
    pub pooled: CumulativeProcess,
    pub estimates: Vec<MonotoneStepEstimate>,
    pub pooled_estimate: MonotoneStepEstimate,
    pub statistics: TestStatistics,
}

impl Fit {
    /// Pools with weights `c_j = n_j / n` and compares on `domain`.
    pub fn from_processes(
        domain: Interval,
        sizes: Vec<usize>,
        processes: Vec<CumulativeProcess>,
    ) -> Result<Self> {
        let weights = GroupWeights::from_sizes(&sizes)?;
        let pooled = pool(&processes, &weights)?;
        let estimates = processes
            .iter()
            .map(grenander)
            .collect::<Result<Vec<_>>>()?;
        let pooled_estimate = grenander(&pooled)?;
        let statistics = compute_statistics(&estimates, &pooled_estimate, &domain)?;
        Ok(Self {
            domain,
            sizes,
            weights,
            processes,
            pooled,
            estimates,
            pooled_estimate,
            statistics,
        })
    }

    pub fn total_size(&self) -> usize {
        self.sizes.iter().sum()
    }
}

pub fn fit_density(samples: &[DensitySample], domain: Interval) -> Result<Fit> {
    let processes = samples
        .iter()
        .map(|s| empirical_cdf(s, &domain))
        .collect::<Result<Vec<_>>>()?;
    Fit::from_processes(domain, samples.iter().map(|s| s.len()).collect(), processes)
}

pub fn fit_regression(samples: &[RegressionSample], domain: Interval) -> Result<Fit> {
    let processes = samples
        .iter()
        .map(|s| regression_cumsum(s, &domain))
        .collect::<Result<Vec<_>>>()?;
    Fit::from_processes(domain, samples.iter().map(|s| s.len()).collect(), processes)
}

/// Nelson–Aalen fits on `[0, upper]`.
pub fn fit_hazard(samples: &[CensoredSample], upper: f64) -> Result<Fit> {
    let processes = samples
        .iter()
        .map(|s| nelson_aalen(s, upper))
        .collect::<Result<Vec<_>>>()?;
    Fit::from_processes(
        Interval::new(0.0, upper)?,
        samples.iter().map(|s| s.len()).collect(),
        processes,
    )
}

/// Nelson–Aalen estimate that is identically zero when no event falls in
/// `[0, upper]`; bootstrap samples may lack events in small groups.
fn hazard_process_or_zero(sample: &CensoredSample, upper: f64) -> Result<CumulativeProcess> {
    match nelson_aalen(sample, upper) {
        Err(Error::NoEvents) => {
            CumulativeProcess::new(Interval::new(0.0, upper)?, vec![upper], vec![0.0], 0.0)
        }
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Rejection sampling from the normalized smooth density estimate.
    DensitySmooth,
    /// Sampling from the pooled Grenander estimate; no theoretical guarantee.
    DensityGrenander,
    /// Within-group resampling of centered residuals.
    RegressionResidual,
    /// Censoring times from each group's Kaplan–Meier estimate.
    HazardGroupwise,
    /// Censoring times from the Kaplan–Meier estimate of all observations.
    HazardPooledCensoring,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::DensitySmooth,
        Scheme::DensityGrenander,
        Scheme::RegressionResidual,
        Scheme::HazardGroupwise,
        Scheme::HazardPooledCensoring,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::DensitySmooth => "density_smooth",
            Scheme::DensityGrenander => "density_grenander",
            Scheme::RegressionResidual => "regression_residual",
            Scheme::HazardGroupwise => "hazard_groupwise",
            Scheme::HazardPooledCensoring => "hazard_pooled_censoring",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Whether bootstrap validity is established for `kind` under this scheme.
    pub fn supports(&self, kind: StatisticKind) -> bool {
        match self {
            Scheme::DensityGrenander => false,
            Scheme::HazardGroupwise => kind == StatisticKind::S1,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    pub scheme: Scheme,
    pub replications: usize,
    pub alpha: f64,
    pub seed: u64,
    pub bandwidth: Bandwidth,
    pub correction: Correction,
    pub source: SourceKind,
}

impl BootstrapConfig {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            replications: 500,
            alpha: 0.05,
            seed: 0,
            bandwidth: Bandwidth::Auto,
            correction: Correction::BoundaryKernel,
            source: SourceKind::Grenander,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("need at least one bootstrap replication".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParameter(format!("bandwidth {h} is not positive")));
            }
        }
        Ok(())
    }
}

/// How the reference function of the bootstrap was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceInfo {
    pub source: SourceKind,
    pub bandwidth: f64,
    pub correction: Correction,
    pub bandwidth_selected: bool,
    pub shift: f64,
    pub normalizer: f64,
}

/// `h = (b − a)/2 · n^{−1/5}`, capped below `0.45 (b − a)`.
pub fn rule_of_thumb_bandwidth(domain: &Interval, n: usize) -> f64 {
    (0.5 * domain.length() * (n.max(1) as f64).powf(-0.2)).min(0.45 * domain.length())
}

/// Smooth estimate of the common function from the pooled process.
/// `Auto` means LSCV for densities and the rule of thumb otherwise.
pub fn smooth_reference(
    fit: &Fit,
    cfg: &BootstrapConfig,
    use_lscv: bool,
) -> Result<(SmoothEstimate, bool)> {
    let source = Arc::new(SmoothSource::new(cfg.source, &fit.pooled)?);
    let (h, selected) = match cfg.bandwidth {
        Bandwidth::Fixed(h) => (h, false),
        Bandwidth::Auto if use_lscv => {
            let grid = default_bandwidth_grid(&fit.domain);
            (
                select_bandwidth(&source, cfg.correction, &fit.pooled, fit.total_size(), &grid)?,
                true,
            )
        }
        Bandwidth::Auto => (rule_of_thumb_bandwidth(&fit.domain, fit.total_size()), true),
    };
    Ok((SmoothEstimate::new(source, h, cfg.correction)?, selected))
}

fn info(est: &SmoothEstimate, selected: bool, shift: f64, normalizer: f64) -> ReferenceInfo {
    ReferenceInfo {
        source: est.source().kind(),
        bandwidth: est.bandwidth(),
        correction: est.correction(),
        bandwidth_selected: selected,
        shift,
        normalizer,
    }
}

/// Draws from a reference density on `[a, b]`.
#[derive(Debug, Clone)]
pub enum DensitySampler {
    /// Uniform proposal with constant envelope `bound`.
    Rejection {
        density: NormalizedDensity,
        bound: f64,
    },
    /// Inverse of the piecewise-linear distribution function of a step
    /// density, normalized by its total mass.
    Step {
        domain: Interval,
        left: Vec<f64>,
        levels: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

impl DensitySampler {
    pub fn rejection(density: NormalizedDensity) -> Result<Self> {
        let bound = ENVELOPE_FACTOR * density.grid_max();
        let rate = 1.0 / (bound * density.domain().length());
        if !(rate >= MIN_ACCEPTANCE_RATE) {
            return Err(Error::DegenerateEnvelope { rate });
        }
        Ok(DensitySampler::Rejection { density, bound })
    }

    pub fn step(est: &MonotoneStepEstimate) -> Result<Self> {
        let domain = est.domain();
        let mut left = vec![domain.a()];
        left.extend_from_slice(est.jump_locations());
        let mut right = est.jump_locations().to_vec();
        right.push(domain.b());
        let levels = est.levels().to_vec();
        if levels.iter().any(|&l| l < 0.0) {
            return Err(Error::DegenerateEstimate("negative step density".into()));
        }
        let mut cumulative = Vec::with_capacity(levels.len());
        let mut acc = 0.0;
        for k in 0..levels.len() {
            acc += levels[k] * (right[k] - left[k]);
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::DegenerateEstimate("step density has no mass".into()));
        }
        Ok(DensitySampler::Step {
            domain,
            left,
            levels,
            cumulative,
        })
    }

    pub fn domain(&self) -> Interval {
        match self {
            DensitySampler::Rejection { density, .. } => density.domain(),
            DensitySampler::Step { domain, .. } => *domain,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DensitySampler::Rejection { density, bound } => {
                let (a, len) = (density.domain().a(), density.domain().length());
                loop {
                    let x = a + len * rng.random::<f64>();
                    if rng.random::<f64>() * bound <= density.pdf(x) {
                        return x;
                    }
                }
            }
            DensitySampler::Step {
                domain,
                left,
                levels,
                cumulative,
            } => {
                let u = rng.random::<f64>() * cumulative[cumulative.len() - 1];
                let k = cumulative
                    .partition_point(|&c| c <= u)
                    .min(levels.len() - 1);
                let below = if k == 0 { 0.0 } else { cumulative[k - 1] };
                (left[k] + (u - below) / levels[k]).clamp(domain.a(), domain.b())
            }
        }
    }

    /// Distribution function of the sampled law.
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            DensitySampler::Rejection { density, .. } => {
                let a = density.domain().a();
                let t = t.clamp(a, density.domain().b());
                // Fine composite rule; used for diagnostics only.
                let panels = 256;
                let step = (t - a) / panels as f64;
                (0..panels)
                    .map(|p| {
                        let l = a + step * p as f64;
                        GL8.integrate(l, l + step, |x| density.pdf(x))
                    })
                    .sum()
            }
            DensitySampler::Step {
                domain,
                left,
                levels,
                cumulative,
            } => {
                let t = t.clamp(domain.a(), domain.b());
                let k = left.partition_point(|&x| x < t).saturating_sub(1);
                let below = if k == 0 { 0.0 } else { cumulative[k - 1] };
                (below + levels[k] * (t - left[k])) / cumulative[cumulative.len() - 1]
            }
        }
    }
}

/// Event times with a given nonnegative failure rate on `[0, b]`, by
/// inversion of the tabulated cumulative hazard.
#[derive(Debug, Clone)]
pub struct HazardSampler {
    hazard: NormalizedDensity,
    grid: Vec<f64>,
    cumulative: Vec<f64>,
}

impl HazardSampler {
    pub fn new(hazard: NormalizedDensity) -> Result<Self> {
        let domain = hazard.domain();
        let check = DENSITY_GRID_POINTS - 1;
        for i in 0..=check {
            let t = domain.a() + domain.length() * i as f64 / check as f64;
            let value = (hazard.estimate().evaluate(t) + hazard.shift()) / hazard.normalizer();
            if value < -1e-12 {
                return Err(Error::NegativeHazard { at: t, value });
            }
        }
        let grid: Vec<f64> = (0..=HAZARD_CELLS)
            .map(|i| domain.a() + domain.length() * i as f64 / HAZARD_CELLS as f64)
            .collect();
        let mut cumulative = Vec::with_capacity(grid.len());
        cumulative.push(0.0);
        for w in grid.windows(2) {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + GL8.integrate(w[0], w[1], |t| hazard.pdf(t)));
        }
        Ok(Self {
            hazard,
            grid,
            cumulative,
        })
    }

    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        let t = t.clamp(self.grid[0], self.grid[HAZARD_CELLS]);
        let k = (self.grid.partition_point(|&x| x <= t) - 1).min(HAZARD_CELLS - 1);
        self.cumulative[k] + GL8.integrate(self.grid[k], t, |s| self.hazard.pdf(s))
    }

    /// Event time, or `+∞` when the cumulative hazard at `b` stays below the
    /// drawn exponential level.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = Exp1.sample(rng);
        if e >= self.cumulative[HAZARD_CELLS] {
            return f64::INFINITY;
        }
        let k = self.cumulative.partition_point(|&c| c <= e) - 1;
        let (mut lo, mut hi) = (self.grid[k], self.grid[k + 1]);
        let base = self.cumulative[k];
        let cell_mass = self.cumulative[k + 1] - base;
        let mut t = lo + (hi - lo) * (e - base) / cell_mass;
        // Newton steps safeguarded by the bracket.
        for _ in 0..60 {
            let residual = base + GL8.integrate(self.grid[k], t, |s| self.hazard.pdf(s)) - e;
            if residual.abs() <= 1e-13 * (1.0 + e) {
                break;
            }
            if residual > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let rate = self.hazard.pdf(t);
            let newton = t - residual / rate;
            t = if rate > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-14 * (1.0 + hi.abs()) {
                break;
            }
        }
        t
    }
}

fn replicate<F>(cfg: &BootstrapConfig, draw: F) -> Result<Vec<TestStatistics>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<TestStatistics> + Sync,
{
    (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| draw(&mut substream(cfg.seed, r)))
        .collect()
}

/// Bootstrap statistics for groups of the given sizes drawn from `sampler`.
pub fn bootstrap_density(
    sizes: &[usize],
    sampler: &DensitySampler,
    cfg: &BootstrapConfig,
) -> Result<Vec<TestStatistics>> {
    let domain = sampler.domain();
    replicate(cfg, |rng| {
        let samples = sizes
            .iter()
            .enumerate()
            .map(|(j, &n)| DensitySample {
                group_id: j,
                observations: (0..n).map(|_| sampler.sample(rng)).collect(),
            })
            .collect::<Vec<_>>();
        Ok(fit_density(&samples, domain)?.statistics)
    })
}

/// Fitted values and centered residuals for each regression group.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPools {
    pub fitted: Vec<Vec<f64>>,
    pub residuals: Vec<Vec<f64>>,
}

pub fn residual_pools(
    samples: &[RegressionSample],
    reference: &SmoothEstimate,
) -> Result<ResidualPools> {
    let domain = reference.domain();
    let mut fitted = Vec::with_capacity(samples.len());
    let mut residuals = Vec::with_capacity(samples.len());
    for s in samples {
        if s.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "group {} needs at least two responses",
                s.group_id
            )));
        }
        let f: Vec<f64> = s.design(&domain).iter().map(|&t| reference.evaluate(t)).collect();
        let raw: Vec<f64> = s.responses.iter().zip(&f).map(|(y, fy)| y - fy).collect();
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        residuals.push(raw.iter().map(|e| e - mean).collect());
        fitted.push(f);
    }
    Ok(ResidualPools { fitted, residuals })
}

pub fn bootstrap_regression(
    pools: &ResidualPools,
    domain: Interval,
    cfg: &BootstrapConfig,
) -> Result<Vec<TestStatistics>> {
    replicate(cfg, |rng| {
        let samples = pools
            .fitted
            .iter()
            .zip(&pools.residuals)
            .enumerate()
            .map(|(j, (f, eps))| RegressionSample {
                group_id: j,
                responses: f
                    .iter()
                    .map(|fy| fy + eps[rng.random_range(0..eps.len())])
                    .collect(),
            })
            .collect::<Vec<_>>();
        Ok(fit_regression(&samples, domain)?.statistics)
    })
}

/// Censoring distributions used by the hazard bootstrap, one per group.
pub fn censoring_distributions(
    samples: &[CensoredSample],
    scheme: Scheme,
) -> Result<Vec<KaplanMeier>> {
    match scheme {
        Scheme::HazardGroupwise => samples.iter().map(|s| kaplan_meier(s, true)).collect(),
        Scheme::HazardPooledCensoring => {
            let all = CensoredSample {
                group_id: 0,
                times: samples.iter().flat_map(|s| s.times.iter().copied()).collect(),
                events: samples.iter().flat_map(|s| s.events.iter().copied()).collect(),
            };
            let km = kaplan_meier(&all, true)?;
            Ok(vec![km; samples.len()])
        }
        other => Err(Error::InvalidParameter(format!(
            "scheme {} does not apply to hazards",
            other.name()
        ))),
    }
}

pub fn bootstrap_hazard(
    sizes: &[usize],
    sampler: &HazardSampler,
    censoring: &[KaplanMeier],
    cfg: &BootstrapConfig,
) -> Result<Vec<TestStatistics>> {
    let upper = sampler.hazard.domain().b();
    replicate(cfg, |rng| {
        let mut processes = Vec::with_capacity(sizes.len());
        for (j, &n) in sizes.iter().enumerate() {
            let mut times = Vec::with_capacity(n);
            let mut events = Vec::with_capacity(n);
            for _ in 0..n {
                let t = sampler.sample(rng);
                let y = censoring[j].sample(rng);
                if t.is_finite() {
                    times.push(t.min(y));
                    events.push(t <= y);
                } else {
                    times.push(y.min(upper));
                    events.push(false);
                }
            }
            let sample = CensoredSample {
                group_id: j,
                times,
                events,
            };
            processes.push(hazard_process_or_zero(&sample, upper)?);
        }
        Ok(Fit::from_processes(Interval::new(0.0, upper)?, sizes.to_vec(), processes)?.statistics)
    })
}

/// Upper `alpha` point: the order statistic `⌈B(1 − α)⌉` of the draws.
pub fn critical_value(draws: &[f64], alpha: f64) -> f64 {
    assert!(!draws.is_empty(), "critical value of an empty draw set");
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len();
    // The small offset keeps exact products such as 4 · 0.75 from rounding up.
    let k = ((b as f64 * (1.0 - alpha) - 1e-9).ceil() as usize).clamp(1, b);
    sorted[k - 1]
}

pub fn p_value(observed: f64, draws: &[f64]) -> f64 {
    let exceed = draws.iter().filter(|&&d| d >= observed).count();
    (1 + exceed) as f64 / (draws.len() + 1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrawSummary {
    pub count: usize,
    pub mean: f64,
    /// `(probability, order statistic)` pairs.
    pub quantiles: Vec<(f64, f64)>,
}

impl DrawSummary {
    pub fn new(draws: &[f64]) -> Self {
        let mut sorted = draws.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantiles = [0.5, 0.9, 0.95, 0.99]
            .iter()
            .map(|&p| (p, critical_value(&sorted, 1.0 - p)))
            .collect();
        Self {
            count: draws.len(),
            mean: draws.iter().sum::<f64>() / draws.len() as f64,
            quantiles,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub statistic_kind: StatisticKind,
    pub observed: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub bootstrap_draws: DrawSummary,
    pub reference: Option<ReferenceInfo>,
    /// False when bootstrap validity is not established for this
    /// statistic under the scheme used.
    pub supported_by_theory: bool,
}

/// Rejects iff `observed` strictly exceeds the critical value.
pub fn decide(kind: StatisticKind, observed: f64, draws: &[f64], alpha: f64) -> TestReport {
    let q = critical_value(draws, alpha);
    TestReport {
        statistic_kind: kind,
        observed,
        critical_value: q,
        p_value: p_value(observed, draws),
        reject: observed > q,
        bootstrap_draws: DrawSummary::new(draws),
        reference: None,
        supported_by_theory: true,
    }
}

/// Observed statistics, bootstrap replications and per-statistic reports.
#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub scheme: Scheme,
    pub observed: TestStatistics,
    pub draws: Vec<TestStatistics>,
    pub reference: Option<ReferenceInfo>,
    pub reports: Vec<TestReport>,
}

fn outcome(
    scheme: Scheme,
    observed: TestStatistics,
    draws: Vec<TestStatistics>,
    reference: Option<ReferenceInfo>,
    alpha: f64,
) -> TestOutcome {
    let reports = [StatisticKind::S1, StatisticKind::S2]
        .into_iter()
        .map(|kind| {
            let values: Vec<f64> = draws.iter().map(|d| d.get(kind)).collect();
            let mut report = decide(kind, observed.get(kind), &values, alpha);
            report.reference = reference.clone();
            report.supported_by_theory = scheme.supports(kind);
            report
        })
        .collect();
    TestOutcome {
        scheme,
        observed,
        draws,
        reference,
        reports,
    }
}

fn require_scheme(cfg: &BootstrapConfig, allowed: &[Scheme], model: &str) -> Result<()> {
    cfg.validate()?;
    if allowed.contains(&cfg.scheme) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "scheme {} does not apply to the {model} model",
            cfg.scheme.name()
        )))
    }
}

/// Reference sampler for a density fit under the configured scheme.
pub fn density_sampler(
    fit: &Fit,
    cfg: &BootstrapConfig,
) -> Result<(DensitySampler, Option<ReferenceInfo>)> {
    match cfg.scheme {
        Scheme::DensitySmooth => {
            let (est, selected) = smooth_reference(fit, cfg, true)?;
            let density = make_density(&est)?;
            let reference = info(&est, selected, density.shift(), density.normalizer());
            Ok((DensitySampler::rejection(density)?, Some(reference)))
        }
        Scheme::DensityGrenander => Ok((DensitySampler::step(&fit.pooled_estimate)?, None)),
        other => Err(Error::InvalidParameter(format!(
            "scheme {} does not apply to the density model",
            other.name()
        ))),
    }
}

pub fn test_density(
    samples: &[DensitySample],
    domain: Interval,
    cfg: &BootstrapConfig,
) -> Result<TestOutcome> {
    require_scheme(cfg, &[Scheme::DensitySmooth, Scheme::DensityGrenander], "density")?;
    let fit = fit_density(samples, domain)?;
    let (sampler, reference) = density_sampler(&fit, cfg)?;
    let draws = bootstrap_density(&fit.sizes, &sampler, cfg)?;
    Ok(outcome(cfg.scheme, fit.statistics, draws, reference, cfg.alpha))
}

pub fn test_regression(
    samples: &[RegressionSample],
    domain: Interval,
    cfg: &BootstrapConfig,
) -> Result<TestOutcome> {
    require_scheme(cfg, &[Scheme::RegressionResidual], "regression")?;
    let fit = fit_regression(samples, domain)?;
    let (est, selected) = smooth_reference(&fit, cfg, false)?;
    let pools = residual_pools(samples, &est)?;
    let draws = bootstrap_regression(&pools, domain, cfg)?;
    let reference = info(&est, selected, 0.0, 1.0);
    Ok(outcome(cfg.scheme, fit.statistics, draws, Some(reference), cfg.alpha))
}

/// Hazard test on `[0, upper]`.
pub fn test_hazard(
    samples: &[CensoredSample],
    upper: f64,
    cfg: &BootstrapConfig,
) -> Result<TestOutcome> {
    require_scheme(
        cfg,
        &[Scheme::HazardGroupwise, Scheme::HazardPooledCensoring],
        "hazard",
    )?;
    let fit = fit_hazard(samples, upper)?;
    let (est, selected) = smooth_reference(&fit, cfg, false)?;
    let hazard = make_hazard(&est)?;
    let reference = info(&est, selected, hazard.shift(), hazard.normalizer());
    let sampler = HazardSampler::new(hazard)?;
    let censoring = censoring_distributions(samples, cfg.scheme)?;
    let draws = bootstrap_hazard(&fit.sizes, &sampler, &censoring, cfg)?;
    Ok(outcome(cfg.scheme, fit.statistics, draws, Some(reference), cfg.alpha))
}
